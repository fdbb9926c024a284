#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "unmix/endmember_init.hpp"
#include "unmix/rng.hpp"
#include "unmix/metrics.hpp"
#include "unmix/mixing.hpp"
#include "unmix/ops.hpp"

using namespace unmix;

namespace {

// noiseless LMM cube whose pixel set includes every pure endmember
HsiCube pure_pixel_cube(const EndmemberMatrix& m, int rows, int cols, std::uint64_t seed) {
    auto abund = gen_abundance_field(rows, cols, m.count, 2.0f, seed);
    float* pa = abund.values.data();
    const int r = m.count;
    // overwrite the first R pixels with one-hot abundances
    for (int k = 0; k < r; ++k) {
        for (int c = 0; c < r; ++c) pa[static_cast<std::int64_t>(k) * r + c] = c == k ? 1.0f : 0.0f;
    }
    return HsiCube::wrap(mode3_product(abund.values, m.values));
}

}  // namespace

TEST_CASE("vca recovers pure pixels on a noiseless LMM cube") {
    auto m = gen_endmembers(3, 24, 7);
    auto cube = pure_pixel_cube(m, 12, 12, 8);
    auto est = vca(cube, 3, 1);
    const auto perm = match_endmembers(est, m);
    CHECK(sad_end(est, m, perm) < 1e-3);
}

TEST_CASE("vca is deterministic for a seed") {
    auto ds = gen_dataset(MixModel::lmm, 10, 10, 4, 20, 30.0f, 3);
    auto a = vca(ds.cube, 4, 123);
    auto b = vca(ds.cube, 4, 123);
    for (std::int64_t i = 0; i < a.values.numel(); ++i)
        CHECK(a.values.values()[i] == b.values.values()[i]);
}

TEST_CASE("vca with R=1 picks the max-norm pixel") {
    auto ds = gen_dataset(MixModel::lmm, 6, 6, 3, 10, std::nullopt, 4);
    auto est = vca(ds.cube, 1, 5);

    // brute force oracle
    const float* p = ds.cube.data.data();
    double best = -1.0;
    std::int64_t best_px = 0;
    for (std::int64_t px = 0; px < 36; ++px) {
        double n = 0.0;
        for (int l = 0; l < 10; ++l) n += static_cast<double>(p[px * 10 + l]) * p[px * 10 + l];
        if (n > best) {
            best = n;
            best_px = px;
        }
    }
    for (int l = 0; l < 10; ++l)
        CHECK(est.values.at({0, l}) == doctest::Approx(std::max(0.0f, p[best_px * 10 + l])));
}

TEST_CASE("vca mean SAD over seeds on pure-pixel cubes") {
    auto m = gen_endmembers(4, 32, 20);
    auto cube = pure_pixel_cube(m, 14, 14, 21);
    double total = 0.0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto est = vca(cube, 4, seed);
        total += sad_end(est, m, match_endmembers(est, m));
    }
    CHECK(total / 10.0 < 0.01);
}

TEST_CASE("vca preconditions") {
    auto ds = gen_dataset(MixModel::lmm, 4, 4, 2, 6, std::nullopt, 11);
    CHECK_THROWS_AS(vca(ds.cube, 7, 0), ValueError);  // R > L
    // rank-deficient: every pixel identical
    Tensor flat = Tensor::full({4, 4, 6}, 0.5f);
    CHECK_THROWS_AS(vca(HsiCube::wrap(flat), 3, 0), ValueError);
}

TEST_CASE("farthest point init") {
    // three distinct spectra, repeated over the cube
    std::vector<float> pix = {2, 0, 0, 1, 1, 1};  // norms 2, 1, sqrt(2)
    std::vector<float> data;
    for (int rep = 0; rep < 4; ++rep) data.insert(data.end(), pix.begin(), pix.end());
    auto cube = HsiCube::wrap(Tensor::from_data({4, 3, 2}, std::move(data)));

    auto est = farthest_point_init(cube, 3);
    // greedy trace: max-norm [2,0] first, then [0,1] (angle pi/2), then [1,1]
    CHECK(est.values.at({0, 0}) == 2.0f);
    CHECK(est.values.at({0, 1}) == 0.0f);
    CHECK(est.values.at({1, 0}) == 0.0f);
    CHECK(est.values.at({1, 1}) == 1.0f);
    CHECK(est.values.at({2, 0}) == 1.0f);
    CHECK(est.values.at({2, 1}) == 1.0f);

    // deterministic: no seed dependence at all
    auto est2 = farthest_point_init(cube, 3);
    for (std::int64_t i = 0; i < est.values.numel(); ++i)
        CHECK(est.values.values()[i] == est2.values.values()[i]);

    // R=1 is the max-norm pixel
    auto one = farthest_point_init(cube, 1);
    CHECK(one.values.at({0, 0}) == 2.0f);

    // all-equal cube is degenerate
    CHECK_THROWS_AS(farthest_point_init(HsiCube::wrap(Tensor::full({3, 3, 2}, 1.0f)), 2),
                    ValueError);
}

TEST_CASE("farthest point exactness on cubes of pure pixels") {
    // every pixel is one of the R pure spectra (repeated, uneven counts);
    // the greedy max-min-angle sweep recovers the vertex set verbatim
    auto m = gen_endmembers(4, 16, 30);
    Rng rng(31);
    std::vector<float> data;
    for (int px = 0; px < 100; ++px) {
        const int r = px < 4 ? px : static_cast<int>(rng.uniform_index(4));
        data.insert(data.end(), m.row(r), m.row(r) + m.bands);
    }
    auto cube = HsiCube::wrap(Tensor::from_data({10, 10, 16}, std::move(data)));
    auto est = farthest_point_init(cube, 4);
    const auto perm = match_endmembers(est, m);
    for (int t = 0; t < 4; ++t)
        for (int l = 0; l < 16; ++l)
            CHECK(est.values.at({perm[static_cast<std::size_t>(t)], l}) == m.values.at({t, l}));
}

TEST_CASE("init_endmembers dispatch") {
    auto ds = gen_dataset(MixModel::lmm, 8, 8, 3, 12, 30.0f, 40);
    InitConfig cfg;
    cfg.method = InitConfig::parse_method("farthest_point");
    auto a = init_endmembers(ds.cube, 3, cfg);
    CHECK(a.count == 3);
    CHECK_THROWS_AS(InitConfig::parse_method("nfindr"), ValueError);
}
