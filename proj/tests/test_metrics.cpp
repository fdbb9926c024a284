#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "unmix/metrics.hpp"
#include "unmix/mixing.hpp"
#include "unmix/rng.hpp"

using namespace unmix;

namespace {

EndmemberMatrix permute_rows(const EndmemberMatrix& m, const std::vector<int>& order) {
    std::vector<float> flat;
    for (int r : order)
        flat.insert(flat.end(), m.row(r), m.row(r) + m.bands);
    return EndmemberMatrix::wrap(Tensor::from_data({m.count, m.bands}, std::move(flat)));
}

double assignment_cost(const EndmemberMatrix& est, const EndmemberMatrix& truth,
                       const std::vector<int>& perm) {
    double total = 0.0;
    for (int t = 0; t < truth.count; ++t)
        total += spectral_angle({truth.row(t), static_cast<std::size_t>(truth.bands)},
                                {est.row(perm[static_cast<std::size_t>(t)]),
                                 static_cast<std::size_t>(est.bands)});
    return total;
}

}  // namespace

TEST_CASE("match_endmembers recovers a row permutation") {
    auto m = gen_endmembers(4, 24, 3);
    const std::vector<int> order{2, 0, 3, 1};
    auto shuffled = permute_rows(m, order);
    const auto perm = match_endmembers(shuffled, m);
    // perm[t] must point at the shuffled row holding true row t
    for (int t = 0; t < 4; ++t) CHECK(order[static_cast<std::size_t>(perm[static_cast<std::size_t>(t)])] == t);
    CHECK(assignment_cost(shuffled, m, perm) == doctest::Approx(0.0).epsilon(1e-9));

    // R=2 crossed estimates resolve to the swap
    auto two = gen_endmembers(2, 16, 4);
    auto crossed = permute_rows(two, {1, 0});
    CHECK(match_endmembers(crossed, two) == std::vector<int>{1, 0});

    auto three = gen_endmembers(3, 16, 5);
    CHECK_THROWS_AS(match_endmembers(two, three), ShapeError);
}

TEST_CASE("match_endmembers is optimal against exhaustive enumeration") {
    for (int r = 2; r <= 6; ++r) {
        for (std::uint64_t trial = 0; trial < 6; ++trial) {
            Rng rng(100 * static_cast<std::uint64_t>(r) + trial);
            std::vector<float> ev(static_cast<std::size_t>(r) * 12), tv(ev.size());
            for (auto& v : ev) v = rng.uniform(0.05f, 1.0f);
            for (auto& v : tv) v = rng.uniform(0.05f, 1.0f);
            auto est = EndmemberMatrix::wrap(Tensor::from_data({r, 12}, std::move(ev)));
            auto truth = EndmemberMatrix::wrap(Tensor::from_data({r, 12}, std::move(tv)));

            const auto got = match_endmembers(est, truth);
            const double got_cost = assignment_cost(est, truth, got);

            std::vector<int> perm(static_cast<std::size_t>(r));
            std::iota(perm.begin(), perm.end(), 0);
            double best = 1e300;
            do {
                best = std::min(best, assignment_cost(est, truth, perm));
            } while (std::next_permutation(perm.begin(), perm.end()));
            CHECK(got_cost == doctest::Approx(best).epsilon(1e-9));
        }
    }
}

TEST_CASE("identical truth rows still give a bijection") {
    auto m = EndmemberMatrix::wrap(
        Tensor::from_data({3, 4}, {1, 2, 3, 4, 1, 2, 3, 4, 1, 2, 3, 4}));
    auto est = gen_endmembers(3, 4, 9);
    const auto perm = match_endmembers(est, m);
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2});
}

TEST_CASE("rmse_abun") {
    auto field = gen_abundance_field(8, 8, 3, 2.0f, 11);
    const std::vector<int> ident{0, 1, 2};
    CHECK(rmse_abun(field, field, ident) == 0.0);

    // uniform +0.1 error on every entry
    AbundanceTensor shifted;
    {
        std::vector<float> v(field.values.data(), field.values.data() + field.values.numel());
        for (auto& x : v) x += 0.1f;
        shifted.values = Tensor::from_data(field.values.shape(), std::move(v));
    }
    CHECK(rmse_abun(shifted, field, ident) == doctest::Approx(0.1).epsilon(1e-5));

    // applying one permutation to both arguments leaves the score unchanged
    auto channel_permuted = [&](const AbundanceTensor& a, const std::vector<int>& order) {
        AbundanceTensor out;
        std::vector<float> v(static_cast<std::size_t>(a.values.numel()));
        const std::int64_t pixels = a.values.numel() / 3;
        for (std::int64_t p = 0; p < pixels; ++p)
            for (int c = 0; c < 3; ++c)
                v[static_cast<std::size_t>(p * 3 + c)] =
                    a.values.values()[p * 3 + order[static_cast<std::size_t>(c)]];
        out.values = Tensor::from_data(a.values.shape(), std::move(v));
        return out;
    };
    const std::vector<int> order{2, 0, 1};
    CHECK(rmse_abun(channel_permuted(shifted, order), channel_permuted(field, order), ident) ==
          doctest::Approx(rmse_abun(shifted, field, ident)).epsilon(1e-7));
}

TEST_CASE("sad_end") {
    auto m = gen_endmembers(4, 20, 21);
    const std::vector<int> ident{0, 1, 2, 3};
    CHECK(sad_end(m, m, ident) == doctest::Approx(0.0).epsilon(1e-9));

    // scale invariance
    EndmemberMatrix scaled;
    {
        std::vector<float> v(m.values.data(), m.values.data() + m.values.numel());
        for (auto& x : v) x *= 0.37f;
        scaled = EndmemberMatrix::wrap(Tensor::from_data({4, 20}, std::move(v)));
    }
    CHECK(sad_end(scaled, m, ident) == doctest::Approx(0.0).epsilon(1e-6));
}

TEST_CASE("rmse_b") {
    NonlinearField b;
    b.values = Tensor::from_data({2, 2, 1}, {0.1f, -0.2f, 0.0f, 0.3f});
    CHECK(rmse_b(b, b) == 0.0);

    // predict-zero baseline on b ~ U[-0.3, 0.3] approaches 0.6/sqrt(12)
    Rng rng(31);
    const int n = 100000;
    std::vector<float> sample(static_cast<std::size_t>(n));
    for (auto& v : sample) v = rng.uniform(-0.3f, 0.3f);
    NonlinearField field, zeros;
    field.values = Tensor::from_data({250, 400, 1}, std::move(sample));
    zeros.values = Tensor::zeros({250, 400, 1});
    const double base = rmse_b(zeros, field);
    CHECK(base == doctest::Approx(0.6 / std::sqrt(12.0)).epsilon(0.02));

    NonlinearField wrong;
    wrong.values = Tensor::zeros({3, 3, 1});
    CHECK_THROWS_AS(rmse_b(wrong, b), ShapeError);
}

TEST_CASE("b_histogram") {
    NonlinearField constant;
    constant.values = Tensor::full({4, 4, 1}, 0.25f);
    auto h = b_histogram(constant, 8);
    std::int64_t occupied = 0, total = 0;
    for (auto c : h.counts) {
        if (c > 0) ++occupied;
        total += c;
    }
    CHECK(occupied == 1);
    CHECK(total == 16);

    // multinomial sanity on a uniform sample: 10 bins within 3 sigma of N/10
    Rng rng(41);
    std::vector<float> sample(10000);
    for (auto& v : sample) v = rng.uniform(-0.3f, 0.3f);
    NonlinearField f;
    f.values = Tensor::from_data({100, 100, 1}, std::move(sample));
    auto hu = b_histogram(f, 10);
    std::int64_t sum = 0;
    const double sigma = std::sqrt(10000 * 0.1 * 0.9);
    for (auto c : hu.counts) {
        CHECK(std::abs(static_cast<double>(c) - 1000.0) <= 3.0 * sigma);
        sum += c;
    }
    CHECK(sum == 10000);

    CHECK_THROWS_AS(b_histogram(f, 0), ValueError);
}
