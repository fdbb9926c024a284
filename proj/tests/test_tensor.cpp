#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include "unmix/gradcheck.hpp"
#include "unmix/ops.hpp"
#include "unmix/rng.hpp"

using namespace unmix;

namespace {

Tensor vec(std::vector<float> v) {
    const int n = static_cast<int>(v.size());
    return Tensor::from_data({n}, std::move(v));
}

Tensor random_tensor(Shape shape, std::uint64_t seed, float lo = -1.0f, float hi = 1.0f) {
    Rng rng(seed);
    std::vector<float> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(v));
}

}  // namespace

TEST_CASE("tensor basics and invariants") {
    CHECK_THROWS_AS(Tensor::from_data({2, 2}, {1.0f, 2.0f, 3.0f}), ShapeError);
    CHECK_THROWS_AS(Tensor::zeros({2, 0, 2}), ShapeError);
    CHECK_THROWS_AS(Tensor::zeros({1, 1, 1, 1, 1, 1}), ShapeError);

    Tensor t = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    CHECK(t.numel() == 6);
    CHECK(t.at({1, 2}) == 6.0f);
    CHECK(t.extent(-1) == 3);
}

TEST_CASE("hadamard") {
    Tensor a = vec({1, 2, 3});
    CHECK(hadamard(a, vec({1, 1, 1})).values()[1] == 2.0f);

    // elementwise loop oracle, exact float equality
    Tensor b = vec({0.2f, 0.4f});
    Tensor prod = hadamard(b, b);
    CHECK(prod.values()[0] == 0.2f * 0.2f);
    CHECK(prod.values()[1] == 0.4f * 0.4f);

    Tensor z = hadamard(a, vec({0, 0, 0}));
    for (float v : z.values()) CHECK(v == 0.0f);

    // trailing-axis broadcast
    Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor s = Tensor::from_data({2, 1}, {2, 10});
    Tensor bx = hadamard(x, s);
    CHECK(bx.at({0, 2}) == 6.0f);
    CHECK(bx.at({1, 0}) == 40.0f);

    CHECK_THROWS_AS(hadamard(a, vec({1, 2})), ShapeError);
}

TEST_CASE("mode3_product") {
    Tensor a = Tensor::from_data({1, 1, 2}, {0.3f, 0.7f});
    Tensor m = Tensor::from_data({2, 3}, {1, 0, 1, 0, 1, 1});
    Tensor y = mode3_product(a, m);
    CHECK(y.at({0, 0, 0}) == doctest::Approx(0.3).epsilon(1e-7));
    CHECK(y.at({0, 0, 1}) == doctest::Approx(0.7).epsilon(1e-7));
    CHECK(y.at({0, 0, 2}) == doctest::Approx(1.0).epsilon(1e-7));

    // one-hot abundance selects the matching row exactly
    Tensor onehot = Tensor::from_data({1, 1, 2}, {1, 0});
    Tensor sel = mode3_product(onehot, m);
    CHECK(sel.at({0, 0, 0}) == 1.0f);
    CHECK(sel.at({0, 0, 1}) == 0.0f);
    CHECK(sel.at({0, 0, 2}) == 1.0f);

    Tensor zero = mode3_product(Tensor::zeros({2, 2, 2}), m);
    for (float v : zero.values()) CHECK(v == 0.0f);

    // naive triple loop oracle on integer-valued inputs: exact equality
    Rng rng(7);
    std::vector<float> av(2 * 3 * 4), mv(4 * 5);
    for (auto& v : av) v = static_cast<float>(rng.uniform_index(7));
    for (auto& v : mv) v = static_cast<float>(rng.uniform_index(7));
    Tensor ai = Tensor::from_data({2, 3, 4}, av);
    Tensor mi = Tensor::from_data({4, 5}, mv);
    Tensor out = mode3_product(ai, mi);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 3; ++j)
            for (int l = 0; l < 5; ++l) {
                float acc = 0.0f;
                for (int r = 0; r < 4; ++r) acc += ai.at({i, j, r}) * mi.at({r, l});
                CHECK(out.at({i, j, l}) == acc);
            }

    CHECK_THROWS_AS(mode3_product(ai, Tensor::from_data({3, 2}, {1, 2, 3, 4, 5, 6})), ShapeError);
}

TEST_CASE("broadcast_field_mul") {
    Tensor t = random_tensor({3, 4, 5}, 11);
    Tensor ones = Tensor::full({3, 4, 1}, 1.0f);
    Tensor same = broadcast_field_mul(ones, t);
    for (std::int64_t i = 0; i < t.numel(); ++i) CHECK(same.values()[i] == t.values()[i]);

    Tensor zeros = broadcast_field_mul(Tensor::zeros({3, 4, 1}), t);
    for (float v : zeros.values()) CHECK(v == 0.0f);

    Tensor half = Tensor::full({1, 1, 1}, 0.5f);
    Tensor row = Tensor::from_data({1, 1, 2}, {0.2f, 0.4f});
    Tensor scaled = broadcast_field_mul(half, row);
    CHECK(scaled.values()[0] == doctest::Approx(0.1).epsilon(1e-7));
    CHECK(scaled.values()[1] == doctest::Approx(0.2).epsilon(1e-7));

    CHECK_THROWS_AS(broadcast_field_mul(Tensor::zeros({2, 4, 1}), t), ShapeError);
}

TEST_CASE("conv2d") {
    // 1x1 kernel as a per-pixel channel sum
    Tensor x = random_tensor({4, 4, 2}, 3);
    Tensor ksum = Tensor::full({1, 1, 2, 1}, 1.0f);
    Tensor sums = conv2d(x, ksum, 1, 1, false);
    CHECK(sums.shape() == Shape{4, 4, 1});
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            CHECK(sums.at({i, j, 0}) == doctest::Approx(x.at({i, j, 0}) + x.at({i, j, 1})));

    // delta kernel: identity, bit for bit
    Tensor kdelta = Tensor::zeros({3, 3, 1, 1});
    kdelta.data()[4] = 1.0f;  // centre tap
    Tensor img = random_tensor({5, 6, 1}, 4);
    Tensor same = conv2d(img, kdelta, 1, 1, true);
    CHECK(same.shape() == img.shape());
    for (std::int64_t i = 0; i < img.numel(); ++i) CHECK(same.values()[i] == img.values()[i]);

    // shape formula: 3x3 stride-2 with pad on 8x8 -> 4x4
    Tensor big = random_tensor({8, 8, 3}, 5);
    Tensor k = random_tensor({3, 3, 3, 7}, 6);
    CHECK(conv2d(big, k, 2, 2, true).shape() == Shape{4, 4, 7});
    // and 25 -> 13 with ceil division
    CHECK(conv2d(random_tensor({25, 25, 1}, 7), random_tensor({3, 3, 1, 1}, 8), 2, 2, true).shape()
          == Shape{13, 13, 1});

    CHECK_THROWS_AS(conv2d(random_tensor({2, 2, 1}, 9), random_tensor({5, 5, 1, 1}, 10), 1, 1,
                           false),
                    ShapeError);

    // naive loop oracle
    Tensor xr = random_tensor({6, 5, 3}, 12);
    Tensor kr = random_tensor({3, 3, 3, 2}, 13);
    Tensor got = conv2d(xr, kr, 2, 2, true);
    for (int oi = 0; oi < got.extent(0); ++oi)
        for (int oj = 0; oj < got.extent(1); ++oj)
            for (int co = 0; co < 2; ++co) {
                double acc = 0.0;
                for (int p = 0; p < 3; ++p)
                    for (int q = 0; q < 3; ++q)
                        for (int ci = 0; ci < 3; ++ci) {
                            const int ii = oi * 2 - 1 + p;
                            const int jj = oj * 2 - 1 + q;
                            if (ii < 0 || ii >= 6 || jj < 0 || jj >= 5) continue;
                            acc += static_cast<double>(xr.at({ii, jj, ci})) *
                                   kr.at({p, q, ci, co});
                        }
                CHECK(got.at({oi, oj, co}) == doctest::Approx(acc).epsilon(1e-5));
            }
}

TEST_CASE("conv3d") {
    // kd=1 identity kernel
    Tensor x = random_tensor({4, 2, 2, 1}, 20);
    Tensor k1 = Tensor::full({1, 1, 1, 1, 1}, 1.0f);
    Tensor same = conv3d(x, k1, true);
    for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(same.values()[i] == x.values()[i]);

    // averaging kernel over the depth sequence [0,3,0]
    Tensor seq = Tensor::from_data({3, 1, 1, 1}, {0, 3, 0});
    Tensor kavg = Tensor::full({3, 1, 1, 1, 1}, 1.0f / 3.0f);
    Tensor mid = conv3d(seq, kavg, true);
    CHECK(mid.at({1, 0, 0, 0}) == doctest::Approx(1.0));

    // depth preserved under zero padding
    CHECK(conv3d(random_tensor({8, 2, 2, 2}, 21), random_tensor({3, 1, 1, 2, 4}, 22), true)
              .shape() == Shape{8, 2, 2, 4});

    CHECK_THROWS_AS(conv3d(random_tensor({2, 2, 2, 1}, 23), random_tensor({5, 1, 1, 1, 1}, 24),
                           false),
                    ShapeError);
}

TEST_CASE("maxpool3d") {
    Tensor x = Tensor::from_data({4, 1, 1, 1}, {1, 5, 2, 2});
    Tensor pooled = maxpool3d(x, 2);
    CHECK(pooled.shape() == Shape{2, 1, 1, 1});
    CHECK(pooled.values()[0] == 5.0f);
    CHECK(pooled.values()[1] == 2.0f);

    Tensor c = Tensor::full({6, 2, 2, 3}, 0.7f);
    Tensor cp = maxpool3d(c, 2);
    for (float v : cp.values()) CHECK(v == 0.7f);

    CHECK(maxpool3d(random_tensor({7, 1, 1, 2}, 9), 2).extent(0) == 3);
    CHECK_THROWS_AS(maxpool3d(random_tensor({1, 1, 1, 1}, 9), 2), ShapeError);

    // ties route the gradient to the first argmax
    Tensor tie = Tensor::from_data({2, 1, 1, 1}, {3, 3});
    Tensor probe = Tensor::from_data({2, 1, 1, 1}, {3, 3}, /*requires_grad=*/true);
    {
        Tape tape;
        Tensor loss = sum(maxpool3d(probe, 2));
        tape.backward(loss);
    }
    CHECK(probe.grad()[0] == 1.0f);
    CHECK(probe.grad()[1] == 0.0f);
    (void)tie;
}

TEST_CASE("activations") {
    CHECK(relu(vec({-2})).values()[0] == 0.0f);
    CHECK(relu(vec({3})).values()[0] == 3.0f);
    CHECK(hardtanh(vec({0.5f}), -1, 1).values()[0] == 0.5f);
    CHECK(hardtanh(vec({7}), -1, 1).values()[0] == 1.0f);
    CHECK(gelu(vec({0})).values()[0] == 0.0f);
    CHECK(sigmoid(vec({0})).values()[0] == 0.5f);
    CHECK(leaky_relu(vec({-1})).values()[0] == doctest::Approx(-0.01));

    // documented tanh-approximation constant: spot value at x=1
    const double kA = std::sqrt(2.0 / 3.14159265358979323846);
    const double expect = 0.5 * (1.0 + std::tanh(kA * (1.0 + 0.044715)));
    CHECK(gelu(vec({1})).values()[0] == doctest::Approx(expect).epsilon(1e-6));
}

TEST_CASE("scaled_softmax") {
    Tensor f = Tensor::full({2, 2, 4}, 0.37f);
    Tensor s = scaled_softmax(f, 1.0f);
    for (float v : s.values()) CHECK(v == doctest::Approx(0.25).epsilon(1e-6));

    // gamma*gap >= 10 makes the winner's share >= 0.99
    Tensor g = Tensor::from_data({1, 1, 3}, {0.0f, 0.5f, 1.0f});
    Tensor hot = scaled_softmax(g, 20.0f);
    CHECK(hot.at({0, 0, 2}) >= 0.99f);

    Tensor logs = Tensor::from_data({1, 1, 3},
                                    {std::log(1.0f), std::log(2.0f), std::log(3.0f)});
    Tensor p = scaled_softmax(logs, 1.0f);
    CHECK(p.at({0, 0, 0}) == doctest::Approx(1.0 / 6.0).epsilon(1e-6));
    CHECK(p.at({0, 0, 1}) == doctest::Approx(2.0 / 6.0).epsilon(1e-6));
    CHECK(p.at({0, 0, 2}) == doctest::Approx(3.0 / 6.0).epsilon(1e-6));

    // nonnegative, sums to 1 within 1e-6 per pixel
    Tensor r = random_tensor({5, 4, 6}, 31, -3.0f, 3.0f);
    Tensor sm = scaled_softmax(r, 2.5f);
    for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 4; ++j) {
            double total = 0.0;
            for (int c = 0; c < 6; ++c) {
                CHECK(sm.at({i, j, c}) >= 0.0f);
                total += sm.at({i, j, c});
            }
            CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
        }

    CHECK_THROWS_AS(scaled_softmax(r, 0.5f), ValueError);
}

TEST_CASE("linear") {
    Tensor x = Tensor::from_data({2, 3}, {1, 2, 3, 4, 5, 6});
    Tensor eye = Tensor::from_data({3, 3}, {1, 0, 0, 0, 1, 0, 0, 0, 1});
    Tensor zb = Tensor::zeros({3});
    Tensor same = linear(x, eye, zb);
    for (std::int64_t i = 0; i < x.numel(); ++i) CHECK(same.values()[i] == x.values()[i]);

    Tensor ones = Tensor::full({3, 2}, 1.0f);
    Tensor summed = linear(Tensor::from_data({1, 3}, {1, 2, 3}), ones, Tensor());
    CHECK(summed.values()[0] == 6.0f);
    CHECK(summed.values()[1] == 6.0f);

    Tensor zw = Tensor::zeros({3, 2});
    Tensor bias = Tensor::from_data({2}, {0.5f, -0.5f});
    Tensor b = linear(x, zw, bias);
    CHECK(b.at({0, 0}) == 0.5f);
    CHECK(b.at({1, 1}) == -0.5f);

    CHECK_THROWS_AS(linear(x, Tensor::zeros({4, 2}), Tensor()), ShapeError);
}

TEST_CASE("tape semantics") {
    // gradient populated exactly once per backward call
    Tensor x = Tensor::from_data({2}, {1, 2}, true);
    {
        Tape tape;
        Tensor y = sum(hadamard(x, x));
        tape.backward(y);
        CHECK(x.grad()[0] == doctest::Approx(2.0));
        CHECK(x.grad()[1] == doctest::Approx(4.0));
        tape.backward(y);  // re-running the same tape must not double grads
        CHECK(x.grad()[0] == doctest::Approx(2.0));
        CHECK(x.grad()[1] == doctest::Approx(4.0));
    }

    // fan-out accumulates within one backward
    Tensor z = Tensor::from_data({2}, {1, 1}, true);
    {
        Tape tape;
        Tensor y = sum(add(z, z));
        tape.backward(y);
        CHECK(z.grad()[0] == 2.0f);
    }

    // f = sum(x): unit gradients exactly
    Tensor u = Tensor::from_data({3}, {5, 6, 7}, true);
    {
        Tape tape;
        Tensor y = sum(u);
        tape.backward(y);
        for (float g : u.grad()) CHECK(g == 1.0f);
    }

    // no recording without an active tape
    Tensor v = Tensor::from_data({2}, {1, 2}, true);
    Tensor out = hadamard(v, v);
    CHECK_FALSE(out.requires_grad());
}

TEST_CASE("grad_check core examples") {
    CHECK(grad_check([](const Tensor& x) { return sum(hadamard(x, x)); },
                     Tensor::from_data({2}, {1, 2}), 1e-3) < 1e-3);
    CHECK(grad_check([](const Tensor& x) { return sum(x); },
                     Tensor::from_data({3}, {1, 2, 3}), 1e-3) < 1e-3);
    CHECK(grad_check([](const Tensor& x) { return sum(relu(x)); },
                     Tensor::from_data({4}, {0.5f, -0.7f, 1.2f, -2.0f}), 1e-3) < 1e-3);
    CHECK_THROWS_AS(grad_check([](const Tensor& x) { return hadamard(x, x); },
                               Tensor::from_data({2}, {1, 2}), 1e-3),
                    ShapeError);
}

TEST_CASE("non-finite values are an error state") {
    Tensor x = vec({1.0f});
    CHECK_THROWS_AS(scale(x, std::numeric_limits<float>::infinity()), NumericError);
    Tensor big = vec({3e38f});
    CHECK_THROWS_AS(hadamard(big, big), NumericError);
}

TEST_CASE("gradient suite over every op and both block types") {
    for (const auto& c : gradcheck_suite()) {
        INFO(c.name);
        CHECK(c.run(3e-3) < c.tolerance);
    }
}
