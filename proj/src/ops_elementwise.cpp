#include <cmath>

#include "op_common.hpp"
#include "unmix/ops.hpp"

namespace unmix {

using opdetail::NodePtr;

Tensor add(const Tensor& a, const Tensor& b) {
    require_shape(a.shape() == b.shape(),
                  "add: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const bool track = tracked(a) || tracked(b);
    Tensor out = Tensor::zeros(a.shape(), track);
    const std::int64_t n = a.numel();
    const float* pa = a.data();
    const float* pb = b.data();
    float* po = out.data();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] + pb[i];
    check_finite(out, "add");
    if (track) {
        NodePtr an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record({on, an, bn}, [an, bn, on, n] {
            const float* g = on->grad.data();
            if (an->requires_grad) {
                float* da = an->grad.data();
                for (std::int64_t i = 0; i < n; ++i) da[i] += g[i];
            }
            if (bn->requires_grad) {
                float* db = bn->grad.data();
                for (std::int64_t i = 0; i < n; ++i) db[i] += g[i];
            }
        });
    }
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_shape(a.shape() == b.shape(),
                  "sub: shape mismatch " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
    const bool track = tracked(a) || tracked(b);
    Tensor out = Tensor::zeros(a.shape(), track);
    const std::int64_t n = a.numel();
    const float* pa = a.data();
    const float* pb = b.data();
    float* po = out.data();
    for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] - pb[i];
    check_finite(out, "sub");
    if (track) {
        NodePtr an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record({on, an, bn}, [an, bn, on, n] {
            const float* g = on->grad.data();
            if (an->requires_grad) {
                float* da = an->grad.data();
                for (std::int64_t i = 0; i < n; ++i) da[i] += g[i];
            }
            if (bn->requires_grad) {
                float* db = bn->grad.data();
                for (std::int64_t i = 0; i < n; ++i) db[i] -= g[i];
            }
        });
    }
    return out;
}

Tensor scale(const Tensor& x, float c) {
    const bool track = tracked(x);
    Tensor out = Tensor::zeros(x.shape(), track);
    const std::int64_t n = x.numel();
    const float* px = x.data();
    float* po = out.data();
    for (std::int64_t i = 0; i < n; ++i) po[i] = px[i] * c;
    check_finite(out, "scale");
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, c, n] {
            const float* g = on->grad.data();
            float* dx = xn->grad.data();
            for (std::int64_t i = 0; i < n; ++i) dx[i] += c * g[i];
        });
    }
    return out;
}

Tensor hadamard(const Tensor& a, const Tensor& b) {
    const bool broadcast = a.shape() != b.shape();
    if (broadcast) {
        // b may broadcast along a size-1 trailing axis only
        Shape expect = a.shape();
        expect.back() = 1;
        require_shape(b.shape() == expect,
                      "hadamard: shapes " + shape_str(a.shape()) + " and " + shape_str(b.shape()) +
                          " are not equal nor broadcastable on the trailing axis");
    }
    const bool track = tracked(a) || tracked(b);
    Tensor out = Tensor::zeros(a.shape(), track);
    const std::int64_t rows = opdetail::leading_numel(a.shape());
    const std::int64_t c = a.shape().back();
    const float* pa = a.data();
    const float* pb = b.data();
    float* po = out.data();
    if (!broadcast) {
        const std::int64_t n = a.numel();
        for (std::int64_t i = 0; i < n; ++i) po[i] = pa[i] * pb[i];
    } else {
        for (std::int64_t r = 0; r < rows; ++r) {
            const float s = pb[r];
            for (std::int64_t j = 0; j < c; ++j) po[r * c + j] = pa[r * c + j] * s;
        }
    }
    check_finite(out, "hadamard");
    if (track) {
        NodePtr an = a.node(), bn = b.node(), on = out.node();
        Tape::active()->record({on, an, bn}, [an, bn, on, rows, c, broadcast] {
            const float* g = on->grad.data();
            const float* pa = an->data.data();
            const float* pb = bn->data.data();
            if (!broadcast) {
                const std::int64_t n = rows * c;
                if (an->requires_grad) {
                    float* da = an->grad.data();
                    for (std::int64_t i = 0; i < n; ++i) da[i] += g[i] * pb[i];
                }
                if (bn->requires_grad) {
                    float* db = bn->grad.data();
                    for (std::int64_t i = 0; i < n; ++i) db[i] += g[i] * pa[i];
                }
            } else {
                if (an->requires_grad) {
                    float* da = an->grad.data();
                    for (std::int64_t r = 0; r < rows; ++r) {
                        const float s = pb[r];
                        for (std::int64_t j = 0; j < c; ++j) da[r * c + j] += g[r * c + j] * s;
                    }
                }
                if (bn->requires_grad) {
                    float* db = bn->grad.data();
                    for (std::int64_t r = 0; r < rows; ++r) {
                        float acc = 0.0f;
                        for (std::int64_t j = 0; j < c; ++j) acc += g[r * c + j] * pa[r * c + j];
                        db[r] += acc;
                    }
                }
            }
        });
    }
    return out;
}

Tensor broadcast_field_mul(const Tensor& field, const Tensor& x) {
    require_shape(field.rank() == 3 && x.rank() == 3, "broadcast_field_mul: rank-3 tensors expected");
    require_shape(field.extent(2) == 1, "broadcast_field_mul: field must have trailing extent 1");
    require_shape(field.extent(0) == x.extent(0) && field.extent(1) == x.extent(1),
                  "broadcast_field_mul: spatial extents differ, " + shape_str(field.shape()) +
                      " vs " + shape_str(x.shape()));
    return hadamard(x, field);
}

namespace {

// gelu tanh approximation with the 0.044715 cubic constant
inline float gelu_fwd(float x) {
    const float kA = 0.7978845608028654f;  // sqrt(2/pi)
    const float u = kA * (x + 0.044715f * x * x * x);
    return 0.5f * x * (1.0f + std::tanh(u));
}

inline float gelu_bwd(float x) {
    const float kA = 0.7978845608028654f;
    const float u = kA * (x + 0.044715f * x * x * x);
    const float t = std::tanh(u);
    const float du = kA * (1.0f + 3.0f * 0.044715f * x * x);
    return 0.5f * (1.0f + t) + 0.5f * x * (1.0f - t * t) * du;
}

inline float sigmoid_fwd(float x) { return 1.0f / (1.0f + std::exp(-x)); }

}  // namespace

Tensor activation(Activation kind, const Tensor& x, float lo, float hi) {
    if (kind == Activation::hardtanh) require_value(lo < hi, "hardtanh: lo must be < hi");
    const bool track = tracked(x);
    Tensor out = Tensor::zeros(x.shape(), track);
    const std::int64_t n = x.numel();
    const float* px = x.data();
    float* po = out.data();
    switch (kind) {
        case Activation::relu:
            for (std::int64_t i = 0; i < n; ++i) po[i] = px[i] > 0.0f ? px[i] : 0.0f;
            break;
        case Activation::leaky_relu:
            for (std::int64_t i = 0; i < n; ++i) po[i] = px[i] > 0.0f ? px[i] : 0.01f * px[i];
            break;
        case Activation::gelu:
            for (std::int64_t i = 0; i < n; ++i) po[i] = gelu_fwd(px[i]);
            break;
        case Activation::hardtanh:
            for (std::int64_t i = 0; i < n; ++i)
                po[i] = px[i] < lo ? lo : (px[i] > hi ? hi : px[i]);
            break;
        case Activation::sigmoid:
            for (std::int64_t i = 0; i < n; ++i) po[i] = sigmoid_fwd(px[i]);
            break;
    }
    check_finite(out, "activation");
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        // Subgradient conventions: relu/leaky take the left derivative at 0,
        // hardtanh is 0 at the clamp boundaries.
        Tape::active()->record({on, xn}, [xn, on, kind, lo, hi, n] {
            const float* g = on->grad.data();
            const float* px = xn->data.data();
            const float* po = on->data.data();
            float* dx = xn->grad.data();
            switch (kind) {
                case Activation::relu:
                    for (std::int64_t i = 0; i < n; ++i)
                        if (px[i] > 0.0f) dx[i] += g[i];
                    break;
                case Activation::leaky_relu:
                    for (std::int64_t i = 0; i < n; ++i)
                        dx[i] += (px[i] > 0.0f ? 1.0f : 0.01f) * g[i];
                    break;
                case Activation::gelu:
                    for (std::int64_t i = 0; i < n; ++i) dx[i] += gelu_bwd(px[i]) * g[i];
                    break;
                case Activation::hardtanh:
                    for (std::int64_t i = 0; i < n; ++i)
                        if (px[i] > lo && px[i] < hi) dx[i] += g[i];
                    break;
                case Activation::sigmoid:
                    for (std::int64_t i = 0; i < n; ++i) dx[i] += po[i] * (1.0f - po[i]) * g[i];
                    break;
            }
        });
    }
    return out;
}

Tensor relu(const Tensor& x) { return activation(Activation::relu, x); }
Tensor leaky_relu(const Tensor& x) { return activation(Activation::leaky_relu, x); }
Tensor gelu(const Tensor& x) { return activation(Activation::gelu, x); }
Tensor hardtanh(const Tensor& x, float lo, float hi) {
    return activation(Activation::hardtanh, x, lo, hi);
}
Tensor sigmoid(const Tensor& x) { return activation(Activation::sigmoid, x); }

Tensor scaled_softmax(const Tensor& x, float gamma) {
    require_value(gamma >= 1.0f, "scaled_softmax: gamma must be >= 1");
    const bool track = tracked(x);
    Tensor out = Tensor::zeros(x.shape(), track);
    const std::int64_t rows = opdetail::leading_numel(x.shape());
    const std::int64_t c = x.shape().back();
    const float* px = x.data();
    float* po = out.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* xr = px + r * c;
        float* orow = po + r * c;
        float m = xr[0];
        for (std::int64_t j = 1; j < c; ++j) m = std::max(m, xr[j]);
        double denom = 0.0;
        for (std::int64_t j = 0; j < c; ++j) {
            orow[j] = std::exp(gamma * (xr[j] - m));
            denom += orow[j];
        }
        const float inv = static_cast<float>(1.0 / denom);
        for (std::int64_t j = 0; j < c; ++j) orow[j] *= inv;
    }
    check_finite(out, "scaled_softmax");
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, gamma, rows, c] {
            const float* g = on->grad.data();
            const float* s = on->data.data();
            float* dx = xn->grad.data();
            for (std::int64_t r = 0; r < rows; ++r) {
                const float* sr = s + r * c;
                const float* gr = g + r * c;
                double dot = 0.0;
                for (std::int64_t j = 0; j < c; ++j) dot += static_cast<double>(sr[j]) * gr[j];
                const float d = static_cast<float>(dot);
                float* dr = dx + r * c;
                for (std::int64_t j = 0; j < c; ++j) dr[j] += gamma * sr[j] * (gr[j] - d);
            }
        });
    }
    return out;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
    const std::int64_t c = x.shape().back();
    require_shape(gain.rank() == 1 && gain.extent(0) == c, "layer_norm: gain extent mismatch");
    require_shape(bias.rank() == 1 && bias.extent(0) == c, "layer_norm: bias extent mismatch");
    const bool track = tracked(x) || tracked(gain) || tracked(bias);
    Tensor out = Tensor::zeros(x.shape(), track);
    const std::int64_t rows = opdetail::leading_numel(x.shape());
    const float* px = x.data();
    const float* pg = gain.data();
    const float* pb = bias.data();
    float* po = out.data();

    auto xhat = std::make_shared<std::vector<float>>(static_cast<std::size_t>(rows * c));
    auto inv_std = std::make_shared<std::vector<float>>(static_cast<std::size_t>(rows));
    for (std::int64_t r = 0; r < rows; ++r) {
        const float* xr = px + r * c;
        double mu = 0.0;
        for (std::int64_t j = 0; j < c; ++j) mu += xr[j];
        mu /= static_cast<double>(c);
        double var = 0.0;
        for (std::int64_t j = 0; j < c; ++j) {
            const double d = xr[j] - mu;
            var += d * d;
        }
        var /= static_cast<double>(c);
        const float is = static_cast<float>(1.0 / std::sqrt(var + eps));
        (*inv_std)[static_cast<std::size_t>(r)] = is;
        float* hr = xhat->data() + r * c;
        float* orow = po + r * c;
        for (std::int64_t j = 0; j < c; ++j) {
            hr[j] = (xr[j] - static_cast<float>(mu)) * is;
            orow[j] = pg[j] * hr[j] + pb[j];
        }
    }
    check_finite(out, "layer_norm");
    if (track) {
        NodePtr xn = x.node(), gn = gain.node(), bn = bias.node(), on = out.node();
        Tape::active()->record({on, xn, gn, bn}, [xn, gn, bn, on, xhat, inv_std, rows, c] {
            const float* g = on->grad.data();
            const float* pg = gn->data.data();
            for (std::int64_t r = 0; r < rows; ++r) {
                const float* gr = g + r * c;
                const float* hr = xhat->data() + r * c;
                if (xn->requires_grad) {
                    const float is = (*inv_std)[static_cast<std::size_t>(r)];
                    double m1 = 0.0, m2 = 0.0;  // mean(gh), mean(gh*xhat)
                    for (std::int64_t j = 0; j < c; ++j) {
                        const double gh = static_cast<double>(gr[j]) * pg[j];
                        m1 += gh;
                        m2 += gh * hr[j];
                    }
                    m1 /= static_cast<double>(c);
                    m2 /= static_cast<double>(c);
                    float* dx = xn->grad.data() + r * c;
                    for (std::int64_t j = 0; j < c; ++j) {
                        const float gh = gr[j] * pg[j];
                        dx[j] += is * (gh - static_cast<float>(m1) - hr[j] * static_cast<float>(m2));
                    }
                }
                if (gn->requires_grad) {
                    float* dg = gn->grad.data();
                    for (std::int64_t j = 0; j < c; ++j) dg[j] += gr[j] * hr[j];
                }
                if (bn->requires_grad) {
                    float* db = bn->grad.data();
                    for (std::int64_t j = 0; j < c; ++j) db[j] += gr[j];
                }
            }
        });
    }
    return out;
}

}  // namespace unmix
