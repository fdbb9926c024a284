#include <cmath>

#include "op_common.hpp"
#include "unmix/ops.hpp"

namespace unmix {

using opdetail::NodePtr;

Tensor sum(const Tensor& x) {
    const bool track = tracked(x);
    const std::int64_t n = x.numel();
    const float* px = x.data();
    double acc = 0.0;  // fixed row-major order, double accumulator
    for (std::int64_t i = 0; i < n; ++i) acc += px[i];
    Tensor out = Tensor::zeros({1}, track);
    out.data()[0] = static_cast<float>(acc);
    check_finite(out, "sum");
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, n] {
            const float g = on->grad[0];
            float* dx = xn->grad.data();
            for (std::int64_t i = 0; i < n; ++i) dx[i] += g;
        });
    }
    return out;
}

Tensor mean_last(const Tensor& x) {
    const std::int64_t c = x.shape().back();
    const std::int64_t rows = opdetail::leading_numel(x.shape());
    Shape out_shape = x.shape();
    out_shape.back() = 1;
    const bool track = tracked(x);
    Tensor out = Tensor::zeros(out_shape, track);
    const float* px = x.data();
    float* po = out.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        double acc = 0.0;
        for (std::int64_t j = 0; j < c; ++j) acc += px[r * c + j];
        po[r] = static_cast<float>(acc / static_cast<double>(c));
    }
    check_finite(out, "mean_last");
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, rows, c] {
            const float* g = on->grad.data();
            float* dx = xn->grad.data();
            const float inv = 1.0f / static_cast<float>(c);
            for (std::int64_t r = 0; r < rows; ++r) {
                const float gr = g[r] * inv;
                for (std::int64_t j = 0; j < c; ++j) dx[r * c + j] += gr;
            }
        });
    }
    return out;
}

Tensor global_avg_pool(const Tensor& x) {
    const std::int64_t c = x.shape().back();
    const std::int64_t rows = opdetail::leading_numel(x.shape());
    const bool track = tracked(x);
    Tensor out = Tensor::zeros({static_cast<int>(c)}, track);
    const float* px = x.data();
    float* po = out.data();
    std::vector<double> acc(static_cast<std::size_t>(c), 0.0);
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < c; ++j) acc[static_cast<std::size_t>(j)] += px[r * c + j];
    for (std::int64_t j = 0; j < c; ++j)
        po[j] = static_cast<float>(acc[static_cast<std::size_t>(j)] / static_cast<double>(rows));
    check_finite(out, "global_avg_pool");
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, rows, c] {
            const float* g = on->grad.data();
            float* dx = xn->grad.data();
            const float inv = 1.0f / static_cast<float>(rows);
            for (std::int64_t r = 0; r < rows; ++r)
                for (std::int64_t j = 0; j < c; ++j) dx[r * c + j] += g[j] * inv;
        });
    }
    return out;
}

Tensor global_max_pool(const Tensor& x) {
    const std::int64_t c = x.shape().back();
    const std::int64_t rows = opdetail::leading_numel(x.shape());
    const bool track = tracked(x);
    Tensor out = Tensor::zeros({static_cast<int>(c)}, track);
    const float* px = x.data();
    float* po = out.data();
    auto arg = std::make_shared<std::vector<std::int64_t>>(static_cast<std::size_t>(c), 0);
    for (std::int64_t j = 0; j < c; ++j) po[j] = px[j];
    for (std::int64_t r = 1; r < rows; ++r) {
        for (std::int64_t j = 0; j < c; ++j) {
            const float v = px[r * c + j];
            if (v > po[j]) {
                po[j] = v;
                (*arg)[static_cast<std::size_t>(j)] = r;
            }
        }
    }
    check_finite(out, "global_max_pool");
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, arg, c] {
            const float* g = on->grad.data();
            float* dx = xn->grad.data();
            for (std::int64_t j = 0; j < c; ++j)
                dx[(*arg)[static_cast<std::size_t>(j)] * c + j] += g[j];
        });
    }
    return out;
}

Tensor scale_channels(const Tensor& x, const Tensor& w) {
    const std::int64_t c = x.shape().back();
    require_shape(w.rank() == 1 && w.extent(0) == c, "scale_channels: weight extent mismatch");
    const bool track = tracked(x) || tracked(w);
    Tensor out = Tensor::zeros(x.shape(), track);
    const std::int64_t rows = opdetail::leading_numel(x.shape());
    const float* px = x.data();
    const float* pw = w.data();
    float* po = out.data();
    for (std::int64_t r = 0; r < rows; ++r)
        for (std::int64_t j = 0; j < c; ++j) po[r * c + j] = px[r * c + j] * pw[j];
    check_finite(out, "scale_channels");
    if (track) {
        NodePtr xn = x.node(), wn = w.node(), on = out.node();
        Tape::active()->record({on, xn, wn}, [xn, wn, on, rows, c] {
            const float* g = on->grad.data();
            const float* px = xn->data.data();
            const float* pw = wn->data.data();
            if (xn->requires_grad) {
                float* dx = xn->grad.data();
                for (std::int64_t r = 0; r < rows; ++r)
                    for (std::int64_t j = 0; j < c; ++j) dx[r * c + j] += g[r * c + j] * pw[j];
            }
            if (wn->requires_grad) {
                float* dw = wn->grad.data();
                for (std::int64_t r = 0; r < rows; ++r)
                    for (std::int64_t j = 0; j < c; ++j) dw[j] += g[r * c + j] * px[r * c + j];
            }
        });
    }
    return out;
}

Tensor spectral_angle_mean(const Tensor& y, const Tensor& y_hat) {
    require_shape(y.shape() == y_hat.shape(), "spectral_angle_mean: shape mismatch");
    const std::int64_t l = y.shape().back();
    const std::int64_t pixels = opdetail::leading_numel(y.shape());
    const bool track = tracked(y) || tracked(y_hat);

    const float* pa = y.data();
    const float* pb = y_hat.data();
    auto cosv = std::make_shared<std::vector<float>>(static_cast<std::size_t>(pixels));
    auto norm_a = std::make_shared<std::vector<float>>(static_cast<std::size_t>(pixels));
    auto norm_b = std::make_shared<std::vector<float>>(static_cast<std::size_t>(pixels));

    double acc = 0.0;
    for (std::int64_t p = 0; p < pixels; ++p) {
        const float* ar = pa + p * l;
        const float* br = pb + p * l;
        double dot = 0.0, na = 0.0, nb = 0.0;
        for (std::int64_t j = 0; j < l; ++j) {
            dot += static_cast<double>(ar[j]) * br[j];
            na += static_cast<double>(ar[j]) * ar[j];
            nb += static_cast<double>(br[j]) * br[j];
        }
        if (na <= 0.0 || nb <= 0.0)
            throw ValueError("spectral_angle_mean: zero-norm pixel at index " + std::to_string(p));
        const double sa = std::sqrt(na), sb = std::sqrt(nb);
        double c = dot / (sa * sb);
        if (c > 1.0) c = 1.0;
        if (c < -1.0) c = -1.0;
        (*cosv)[static_cast<std::size_t>(p)] = static_cast<float>(c);
        (*norm_a)[static_cast<std::size_t>(p)] = static_cast<float>(sa);
        (*norm_b)[static_cast<std::size_t>(p)] = static_cast<float>(sb);
        acc += std::acos(c);
    }
    Tensor out = Tensor::zeros({1}, track);
    out.data()[0] = static_cast<float>(acc / static_cast<double>(pixels));
    check_finite(out, "spectral_angle_mean");

    if (track) {
        NodePtr an = y.node(), bn = y_hat.node(), on = out.node();
        Tape::active()->record({on, an, bn}, [an, bn, on, cosv, norm_a, norm_b, pixels, l] {
            const float gscale = on->grad[0] / static_cast<float>(pixels);
            const float* pa = an->data.data();
            const float* pb = bn->data.data();
            for (std::int64_t p = 0; p < pixels; ++p) {
                const float c = (*cosv)[static_cast<std::size_t>(p)];
                const float na = (*norm_a)[static_cast<std::size_t>(p)];
                const float nb = (*norm_b)[static_cast<std::size_t>(p)];
                // d acos(c)/dc, bounded near |c|=1 to keep the step finite
                const float denom = std::sqrt(std::max(1.0f - c * c, 1e-12f));
                const float dacos = -1.0f / denom;
                const float* ar = pa + p * l;
                const float* br = pb + p * l;
                if (bn->requires_grad) {
                    float* db = bn->grad.data() + p * l;
                    const float inv_ab = 1.0f / (na * nb);
                    const float inv_bb = c / (nb * nb);
                    for (std::int64_t j = 0; j < l; ++j)
                        db[j] += gscale * dacos * (ar[j] * inv_ab - br[j] * inv_bb);
                }
                if (an->requires_grad) {
                    float* da = an->grad.data() + p * l;
                    const float inv_ab = 1.0f / (na * nb);
                    const float inv_aa = c / (na * na);
                    for (std::int64_t j = 0; j < l; ++j)
                        da[j] += gscale * dacos * (br[j] * inv_ab - ar[j] * inv_aa);
                }
            }
        });
    }
    return out;
}

}  // namespace unmix
