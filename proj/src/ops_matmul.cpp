#include "op_common.hpp"
#include "unmix/ops.hpp"
#include "unmix/parallel.hpp"

namespace unmix {

using opdetail::NodePtr;

Tensor matmul_last(const Tensor& x, const Tensor& w) {
    require_shape(w.rank() == 2, "matmul_last: weight must be rank 2");
    const std::int64_t din = x.shape().back();
    require_shape(w.extent(0) == din, "matmul_last: inner extents differ, input " +
                                          shape_str(x.shape()) + " weight " + shape_str(w.shape()));
    const std::int64_t dout = w.extent(1);
    const std::int64_t rows = opdetail::leading_numel(x.shape());

    Shape out_shape = x.shape();
    out_shape.back() = static_cast<int>(dout);
    const bool track = tracked(x) || tracked(w);
    Tensor out = Tensor::zeros(out_shape, track);

    const float* px = x.data();
    const float* pw = w.data();
    float* po = out.data();
    parallel_for(rows, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t r = r0; r < r1; ++r) {
            const float* xr = px + r * din;
            float* orow = po + r * dout;
            for (std::int64_t d = 0; d < din; ++d) {
                const float xv = xr[d];
                const float* wrow = pw + d * dout;
                for (std::int64_t o = 0; o < dout; ++o) orow[o] += xv * wrow[o];
            }
        }
    });
    check_finite(out, "matmul_last");

    if (track) {
        NodePtr xn = x.node(), wn = w.node(), on = out.node();
        Tape::active()->record({on, xn, wn}, [xn, wn, on, rows, din, dout] {
            const float* g = on->grad.data();
            const float* px = xn->data.data();
            const float* pw = wn->data.data();
            if (xn->requires_grad) {
                float* dx = xn->grad.data();
                parallel_for(rows, [&](std::int64_t r0, std::int64_t r1) {
                    for (std::int64_t r = r0; r < r1; ++r) {
                        const float* gr = g + r * dout;
                        float* dxr = dx + r * din;
                        for (std::int64_t d = 0; d < din; ++d) {
                            const float* wrow = pw + d * dout;
                            float acc = 0.0f;
                            for (std::int64_t o = 0; o < dout; ++o) acc += gr[o] * wrow[o];
                            dxr[d] += acc;
                        }
                    }
                });
            }
            if (wn->requires_grad) {
                float* dw = wn->grad.data();
                for (std::int64_t r = 0; r < rows; ++r) {
                    const float* gr = g + r * dout;
                    const float* xr = px + r * din;
                    for (std::int64_t d = 0; d < din; ++d) {
                        const float xv = xr[d];
                        float* dwr = dw + d * dout;
                        for (std::int64_t o = 0; o < dout; ++o) dwr[o] += xv * gr[o];
                    }
                }
            }
        });
    }
    return out;
}

Tensor add_bias_last(const Tensor& x, const Tensor& bias) {
    const std::int64_t c = x.shape().back();
    require_shape(bias.rank() == 1 && bias.extent(0) == c, "add_bias_last: bias extent mismatch");
    const bool track = tracked(x) || tracked(bias);
    Tensor out = Tensor::zeros(x.shape(), track);
    const std::int64_t rows = opdetail::leading_numel(x.shape());
    const float* px = x.data();
    const float* pb = bias.data();
    float* po = out.data();
    for (std::int64_t r = 0; r < rows; ++r) {
        for (std::int64_t j = 0; j < c; ++j) po[r * c + j] = px[r * c + j] + pb[j];
    }
    check_finite(out, "add_bias_last");
    if (track) {
        NodePtr xn = x.node(), bn = bias.node(), on = out.node();
        Tape::active()->record({on, xn, bn}, [xn, bn, on, rows, c] {
            const float* g = on->grad.data();
            if (xn->requires_grad) {
                float* dx = xn->grad.data();
                const std::int64_t n = rows * c;
                for (std::int64_t i = 0; i < n; ++i) dx[i] += g[i];
            }
            if (bn->requires_grad) {
                float* db = bn->grad.data();
                for (std::int64_t r = 0; r < rows; ++r)
                    for (std::int64_t j = 0; j < c; ++j) db[j] += g[r * c + j];
            }
        });
    }
    return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias) {
    Tensor y = matmul_last(x, w);
    if (!bias.defined()) return y;
    return add_bias_last(y, bias);
}

Tensor mode3_product(const Tensor& a, const Tensor& m) {
    require_shape(a.rank() == 3, "mode3_product: first argument must be rank 3");
    require_shape(m.rank() == 2, "mode3_product: second argument must be rank 2");
    require_shape(a.extent(2) == m.extent(0),
                  "mode3_product: third extent of A (" + std::to_string(a.extent(2)) +
                      ") must equal first extent of M (" + std::to_string(m.extent(0)) + ")");
    return matmul_last(a, m);
}

}  // namespace unmix
