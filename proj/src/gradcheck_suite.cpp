#include "unmix/attention.hpp"
#include "unmix/gradcheck.hpp"
#include "unmix/ops.hpp"
#include "unmix/rng.hpp"

namespace unmix {

namespace {

// magnitudes in [lo,hi] with random sign: keeps inputs clear of the relu /
// leaky_relu kink at 0 for any eps <= 1e-2
Tensor rand_signed(Shape shape, Rng& rng, float lo = 0.2f, float hi = 1.0f) {
    std::vector<float> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) {
        const float mag = rng.uniform(lo, hi);
        x = rng.uniform() < 0.5f ? -mag : mag;
    }
    return Tensor::from_data(std::move(shape), std::move(v));
}

Tensor rand_uniform(Shape shape, Rng& rng, float lo, float hi) {
    std::vector<float> v(static_cast<std::size_t>(shape_numel(shape)));
    for (auto& x : v) x = rng.uniform(lo, hi);
    return Tensor::from_data(std::move(shape), std::move(v));
}

using RawFn = std::function<Tensor(const Tensor&)>;

// Scalarises op(x) as
//   sum((op(x) - op(x0)) .* w)  +  sum((x - x0) .* floor_w)
// Centering on the unperturbed output keeps the float32 reduction noise at
// the scale of the perturbation instead of |f|, and the second term puts an
// exact O(1) gradient under every input element so the relative error is
// never measured against a component that softmax-style jacobians cancel to
// ~0. A wrong op gradient still shifts the total one to one.
GradCheckCase make_case(std::string name, double tol, Shape in_shape, std::uint64_t seed,
                        std::function<RawFn(Rng&)> build, float lo = 0.2f, float hi = 1.0f,
                        bool signed_input = true) {
    auto run = [in_shape, seed, build, lo, hi, signed_input](double eps) {
        Rng rng(seed);
        RawFn raw = build(rng);
        Rng in_rng = rng.split(99);
        Tensor x0 = signed_input ? rand_signed(in_shape, in_rng, lo, hi)
                                 : rand_uniform(in_shape, in_rng, lo, hi);
        Tensor base = raw(x0);
        Rng w_rng = rng.split(98);
        // op-path weights stay small so the floor term owns the denominator;
        // any structural backward bug still lands orders above tolerance
        Tensor w = rand_uniform(base.shape(), w_rng, 0.01f, 0.03f);
        Tensor x0_const = x0.detached_copy();
        Rng f_rng = rng.split(97);
        Tensor floor_w = rand_uniform(x0.shape(), f_rng, 1.0f, 2.0f);
        auto f = [raw, base, w, x0_const, floor_w](const Tensor& x) {
            return add(sum(hadamard(sub(raw(x), base), w)),
                       sum(hadamard(sub(x, x0_const), floor_w)));
        };
        return grad_check(f, x0, eps);
    };
    return GradCheckCase{std::move(name), tol, std::move(run)};
}

std::vector<GradCheckCase> build_suite() {
    std::vector<GradCheckCase> cases;
    const double tol_op = 1e-3;
    const double tol_block = 2e-3;

    cases.push_back(make_case("hadamard_lhs", tol_op, {3, 4}, 11, [](Rng& rng) {
        Tensor other = rand_signed({3, 4}, rng);
        return [other](const Tensor& x) { return hadamard(x, other); };
    }));
    cases.push_back(make_case("hadamard_rhs_broadcast", tol_op, {3, 4, 1}, 12, [](Rng& rng) {
        Tensor a = rand_signed({3, 4, 5}, rng);
        return [a](const Tensor& x) { return hadamard(a, x); };
    }));
    cases.push_back(make_case("broadcast_field_mul_field", tol_op, {3, 3, 1}, 13, [](Rng& rng) {
        Tensor t = rand_signed({3, 3, 4}, rng);
        return [t](const Tensor& x) { return broadcast_field_mul(x, t); };
    }));
    cases.push_back(make_case("mode3_product_a", tol_op, {3, 3, 4}, 14, [](Rng& rng) {
        Tensor m = rand_signed({4, 5}, rng);
        return [m](const Tensor& x) { return mode3_product(x, m); };
    }));
    cases.push_back(make_case("mode3_product_m", tol_op, {4, 5}, 15, [](Rng& rng) {
        Tensor a = rand_signed({3, 3, 4}, rng);
        return [a](const Tensor& x) { return mode3_product(a, x); };
    }));
    cases.push_back(make_case("linear_x", tol_op, {4, 3}, 16, [](Rng& rng) {
        Tensor w = rand_signed({3, 5}, rng);
        Tensor b = rand_signed({5}, rng);
        return [w, b](const Tensor& x) { return linear(x, w, b); };
    }));
    cases.push_back(make_case("linear_weight", tol_op, {3, 5}, 17, [](Rng& rng) {
        Tensor in = rand_signed({4, 3}, rng);
        Tensor b = rand_signed({5}, rng);
        return [in, b](const Tensor& x) { return linear(in, x, b); };
    }));
    cases.push_back(make_case("linear_bias", tol_op, {5}, 18, [](Rng& rng) {
        Tensor in = rand_signed({4, 3}, rng);
        Tensor w = rand_signed({3, 5}, rng);
        return [in, w](const Tensor& x) { return linear(in, w, x); };
    }));
    cases.push_back(make_case("conv2d_x", tol_op, {6, 6, 3}, 19, [](Rng& rng) {
        Tensor k = rand_signed({3, 3, 3, 4}, rng);
        return [k](const Tensor& x) { return conv2d(x, k, 1, 1, true); };
    }));
    cases.push_back(make_case("conv2d_kernel_stride2", tol_op, {3, 3, 3, 4}, 20, [](Rng& rng) {
        Tensor in = rand_signed({8, 8, 3}, rng);
        return [in](const Tensor& x) { return conv2d(in, x, 2, 2, true); };
    }));
    cases.push_back(make_case("depthwise_conv2d_x", tol_op, {5, 5, 3}, 21, [](Rng& rng) {
        Tensor k = rand_signed({3, 3, 3}, rng);
        return [k](const Tensor& x) { return depthwise_conv2d(x, k); };
    }));
    cases.push_back(make_case("depthwise_conv2d_kernel", tol_op, {3, 3, 3}, 22, [](Rng& rng) {
        Tensor in = rand_signed({5, 5, 3}, rng);
        return [in](const Tensor& x) { return depthwise_conv2d(in, x); };
    }));
    cases.push_back(make_case("conv3d_x", tol_op, {6, 3, 3, 2}, 23, [](Rng& rng) {
        Tensor k = rand_signed({3, 1, 1, 2, 3}, rng);
        return [k](const Tensor& x) { return conv3d(x, k, true); };
    }));
    cases.push_back(make_case("conv3d_kernel", tol_op, {3, 1, 1, 2, 3}, 24, [](Rng& rng) {
        Tensor in = rand_signed({6, 3, 3, 2}, rng);
        return [in](const Tensor& x) { return conv3d(in, x, true); };
    }));
    cases.push_back(make_case("maxpool3d", tol_op, {6, 2, 2, 3}, 25, [](Rng&) {
        return [](const Tensor& x) { return maxpool3d(x, 2); };
    }));
    cases.push_back(make_case("relu", tol_op, {4, 5}, 26, [](Rng&) {
        return [](const Tensor& x) { return relu(x); };
    }));
    cases.push_back(make_case("leaky_relu", tol_op, {4, 5}, 27, [](Rng&) {
        return [](const Tensor& x) { return leaky_relu(x); };
    }));
    cases.push_back(make_case("gelu", tol_op, {4, 5}, 28, [](Rng&) {
        return [](const Tensor& x) { return gelu(x); };
    }));
    // magnitudes in [0.1, 0.85] keep a margin to the clamp kinks at +/-1
    cases.push_back(make_case(
        "hardtanh", tol_op, {4, 5}, 29,
        [](Rng&) {
            return [](const Tensor& x) { return hardtanh(x, -1.0f, 1.0f); };
        },
        0.1f, 0.85f));
    cases.push_back(make_case("sigmoid", tol_op, {4, 5}, 30, [](Rng&) {
        return [](const Tensor& x) { return sigmoid(x); };
    }));
    cases.push_back(make_case("scaled_softmax", tol_op, {3, 3, 4}, 31, [](Rng&) {
        return [](const Tensor& x) { return scaled_softmax(x, 1.7f); };
    }));
    cases.push_back(make_case("layer_norm_x", tol_op, {4, 6}, 32, [](Rng& rng) {
        Tensor gain = rand_signed({6}, rng, 0.5f, 1.2f);
        Tensor bias = rand_signed({6}, rng, 0.1f, 0.4f);
        return [gain, bias](const Tensor& x) { return layer_norm(x, gain, bias); };
    }));
    cases.push_back(make_case("layer_norm_gain", tol_op, {6}, 33, [](Rng& rng) {
        Tensor in = rand_signed({4, 6}, rng);
        Tensor bias = rand_signed({6}, rng, 0.1f, 0.4f);
        return [in, bias](const Tensor& x) { return layer_norm(in, x, bias); };
    }));
    cases.push_back(make_case("adaptive_avg_pool2d", tol_op, {6, 6, 3}, 34, [](Rng&) {
        return [](const Tensor& x) { return adaptive_avg_pool2d(x, 4, 4); };
    }));
    cases.push_back(make_case("bilinear_resize", tol_op, {4, 4, 3}, 35, [](Rng&) {
        return [](const Tensor& x) { return bilinear_resize(x, 7, 6); };
    }));
    cases.push_back(make_case("permute_reshape_slice_concat", tol_op, {3, 4, 5}, 36, [](Rng&) {
        return [](const Tensor& x) {
            Tensor p = permute(x, {1, 0, 2});
            Tensor r = reshape(p, {4, 3, 5});
            Tensor a = slice_last(r, 0, 2);
            Tensor b = slice_last(r, 2, 3);
            return concat_last({a, b, r});
        };
    }));
    cases.push_back(make_case("mean_last", tol_op, {3, 4, 6}, 37, [](Rng&) {
        return [](const Tensor& x) { return mean_last(x); };
    }));
    cases.push_back(make_case("global_pools_scale_channels", tol_op, {4, 4, 5}, 38, [](Rng&) {
        return [](const Tensor& x) {
            Tensor gate = sigmoid(add(global_avg_pool(x), global_max_pool(x)));
            return scale_channels(x, gate);
        };
    }));
    cases.push_back(make_case("swda_q", tol_op, {5, 5, 4}, 39, [](Rng& rng) {
        Tensor k = rand_signed({5, 5, 4}, rng);
        Tensor v = rand_signed({5, 5, 4}, rng);
        return [k, v](const Tensor& x) { return swda(x, k, v, 2, 3); };
    }));
    cases.push_back(make_case("swda_k", tol_op, {5, 5, 4}, 40, [](Rng& rng) {
        Tensor q = rand_signed({5, 5, 4}, rng);
        Tensor v = rand_signed({5, 5, 4}, rng);
        return [q, v](const Tensor& x) { return swda(q, x, v, 2, 3); };
    }));
    cases.push_back(make_case("swda_v", tol_op, {5, 5, 4}, 41, [](Rng& rng) {
        Tensor q = rand_signed({5, 5, 4}, rng);
        Tensor k = rand_signed({5, 5, 4}, rng);
        return [q, k](const Tensor& x) { return swda(q, k, x, 2, 3); };
    }));
    cases.push_back(make_case("dense_attention_q", tol_op, {4, 4, 4}, 42, [](Rng& rng) {
        Tensor k = rand_signed({4, 4, 4}, rng);
        Tensor v = rand_signed({4, 4, 4}, rng);
        return [k, v](const Tensor& x) { return dense_attention(x, k, v); };
    }));
    cases.push_back(make_case("dense_attention_k", tol_op, {4, 4, 4}, 43, [](Rng& rng) {
        Tensor q = rand_signed({4, 4, 4}, rng);
        Tensor v = rand_signed({4, 4, 4}, rng);
        return [q, v](const Tensor& x) { return dense_attention(q, x, v); };
    }));
    cases.push_back(make_case("dense_attention_v", tol_op, {4, 4, 4}, 44, [](Rng& rng) {
        Tensor q = rand_signed({4, 4, 4}, rng);
        Tensor k = rand_signed({4, 4, 4}, rng);
        return [q, k](const Tensor& x) { return dense_attention(q, k, x); };
    }));
    // strictly positive spectra keep the angle away from 0 where acos is
    // non-differentiable; the op reduces internally so it cannot be centred
    cases.push_back(make_case(
        "spectral_angle_mean", tol_block, {2, 2, 5}, 45,
        [](Rng& rng) {
            Tensor y = rand_uniform({2, 2, 5}, rng, 0.2f, 1.0f);
            return [y](const Tensor& x) { return spectral_angle_mean(y, x); };
        },
        0.2f, 1.0f, /*signed_input=*/false));
    cases.push_back(make_case("msda_block", tol_block, {6, 6, 6}, 46, [](Rng& rng) {
        auto cfg = AttentionConfig::multi_scale(3, 2, 3);
        auto block = std::make_shared<TransformerBlock>(AttentionCore::Mode::sliding, cfg, rng);
        return [block](const Tensor& x) { return block->forward(x); };
    }));
    cases.push_back(make_case("mhsa_block", tol_block, {5, 5, 6}, 47, [](Rng& rng) {
        auto cfg = AttentionConfig::multi_scale(3, 2, 3);
        auto block = std::make_shared<TransformerBlock>(AttentionCore::Mode::dense, cfg, rng);
        return [block](const Tensor& x) { return block->forward(x); };
    }));

    return cases;
}

}  // namespace

const std::vector<GradCheckCase>& gradcheck_suite() {
    static const std::vector<GradCheckCase> suite = build_suite();
    return suite;
}

}  // namespace unmix
