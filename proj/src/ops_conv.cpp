#include <cstdint>

#include "op_common.hpp"
#include "unmix/ops.hpp"
#include "unmix/parallel.hpp"

namespace unmix {

using opdetail::NodePtr;

Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride_h, int stride_w, bool zero_pad) {
    require_shape(x.rank() == 3, "conv2d: input must be (H,W,Cin)");
    require_shape(kernel.rank() == 4, "conv2d: kernel must be (kh,kw,Cin,Cout)");
    require_value(stride_h >= 1 && stride_w >= 1, "conv2d: strides must be >= 1");
    const int H = x.extent(0), W = x.extent(1), Ci = x.extent(2);
    const int kh = kernel.extent(0), kw = kernel.extent(1);
    require_shape(kernel.extent(2) == Ci, "conv2d: kernel Cin mismatch");
    const int Co = kernel.extent(3);
    const int ph = zero_pad ? (kh - 1) / 2 : 0;
    const int pw = zero_pad ? (kw - 1) / 2 : 0;
    require_shape(H + 2 * ph >= kh && W + 2 * pw >= kw, "conv2d: kernel larger than padded input");
    const int OH = (H + 2 * ph - kh) / stride_h + 1;
    const int OW = (W + 2 * pw - kw) / stride_w + 1;

    const bool track = tracked(x) || tracked(kernel);
    Tensor out = Tensor::zeros({OH, OW, Co}, track);
    const float* px = x.data();
    const float* pk = kernel.data();
    float* po = out.data();

    parallel_for(OH, [&](std::int64_t o0, std::int64_t o1) {
        for (std::int64_t oi = o0; oi < o1; ++oi) {
            for (int oj = 0; oj < OW; ++oj) {
                float* orow = po + (oi * OW + oj) * Co;
                for (int p = 0; p < kh; ++p) {
                    const std::int64_t ii = oi * stride_h - ph + p;
                    if (ii < 0 || ii >= H) continue;
                    for (int q = 0; q < kw; ++q) {
                        const std::int64_t jj = static_cast<std::int64_t>(oj) * stride_w - pw + q;
                        if (jj < 0 || jj >= W) continue;
                        const float* xpix = px + (ii * W + jj) * Ci;
                        const float* krow = pk + ((static_cast<std::int64_t>(p) * kw + q) * Ci) * Co;
                        for (int ci = 0; ci < Ci; ++ci) {
                            const float xv = xpix[ci];
                            const float* kc = krow + static_cast<std::int64_t>(ci) * Co;
                            for (int co = 0; co < Co; ++co) orow[co] += xv * kc[co];
                        }
                    }
                }
            }
        }
    });
    check_finite(out, "conv2d");

    if (track) {
        NodePtr xn = x.node(), kn = kernel.node(), on = out.node();
        Tape::active()->record({on, xn, kn}, [xn, kn, on, H, W, Ci, kh, kw, Co, ph, pw, stride_h,
                                              stride_w, OH, OW] {
            const float* g = on->grad.data();
            const float* px = xn->data.data();
            const float* pk = kn->data.data();
            if (xn->requires_grad) {
                // gather per input pixel: every (p,q) maps back to one output
                float* dx = xn->grad.data();
                parallel_for(H, [&](std::int64_t i0, std::int64_t i1) {
                    for (std::int64_t ii = i0; ii < i1; ++ii) {
                        for (int jj = 0; jj < W; ++jj) {
                            float* dpix = dx + (ii * W + jj) * Ci;
                            for (int p = 0; p < kh; ++p) {
                                const std::int64_t num_i = ii + ph - p;
                                if (num_i < 0 || num_i % stride_h != 0) continue;
                                const std::int64_t oi = num_i / stride_h;
                                if (oi >= OH) continue;
                                for (int q = 0; q < kw; ++q) {
                                    const std::int64_t num_j = jj + pw - q;
                                    if (num_j < 0 || num_j % stride_w != 0) continue;
                                    const std::int64_t oj = num_j / stride_w;
                                    if (oj >= OW) continue;
                                    const float* grow = g + (oi * OW + oj) * Co;
                                    const float* krow =
                                        pk + ((static_cast<std::int64_t>(p) * kw + q) * Ci) * Co;
                                    for (int ci = 0; ci < Ci; ++ci) {
                                        const float* kc = krow + static_cast<std::int64_t>(ci) * Co;
                                        float acc = 0.0f;
                                        for (int co = 0; co < Co; ++co) acc += grow[co] * kc[co];
                                        dpix[ci] += acc;
                                    }
                                }
                            }
                        }
                    }
                });
            }
            if (kn->requires_grad) {
                // gather per kernel tap
                float* dk = kn->grad.data();
                parallel_for(static_cast<std::int64_t>(kh) * kw, [&](std::int64_t t0,
                                                                     std::int64_t t1) {
                    for (std::int64_t t = t0; t < t1; ++t) {
                        const int p = static_cast<int>(t / kw);
                        const int q = static_cast<int>(t % kw);
                        float* dkrow = dk + (t * Ci) * Co;
                        for (std::int64_t oi = 0; oi < OH; ++oi) {
                            const std::int64_t ii = oi * stride_h - ph + p;
                            if (ii < 0 || ii >= H) continue;
                            for (std::int64_t oj = 0; oj < OW; ++oj) {
                                const std::int64_t jj = oj * stride_w - pw + q;
                                if (jj < 0 || jj >= W) continue;
                                const float* xpix = px + (ii * W + jj) * Ci;
                                const float* grow = g + (oi * OW + oj) * Co;
                                for (int ci = 0; ci < Ci; ++ci) {
                                    const float xv = xpix[ci];
                                    float* dkc = dkrow + static_cast<std::int64_t>(ci) * Co;
                                    for (int co = 0; co < Co; ++co) dkc[co] += xv * grow[co];
                                }
                            }
                        }
                    }
                });
            }
        });
    }
    return out;
}

Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernel) {
    require_shape(x.rank() == 3, "depthwise_conv2d: input must be (H,W,C)");
    require_shape(kernel.rank() == 3 && kernel.extent(2) == x.extent(2),
                  "depthwise_conv2d: kernel must be (kh,kw,C)");
    const int H = x.extent(0), W = x.extent(1), C = x.extent(2);
    const int kh = kernel.extent(0), kw = kernel.extent(1);
    const int ph = (kh - 1) / 2, pw = (kw - 1) / 2;

    const bool track = tracked(x) || tracked(kernel);
    Tensor out = Tensor::zeros({H, W, C}, track);
    const float* px = x.data();
    const float* pk = kernel.data();
    float* po = out.data();
    parallel_for(H, [&](std::int64_t i0, std::int64_t i1) {
        for (std::int64_t i = i0; i < i1; ++i) {
            for (int j = 0; j < W; ++j) {
                float* orow = po + (i * W + j) * C;
                for (int p = 0; p < kh; ++p) {
                    const std::int64_t ii = i - ph + p;
                    if (ii < 0 || ii >= H) continue;
                    for (int q = 0; q < kw; ++q) {
                        const std::int64_t jj = static_cast<std::int64_t>(j) - pw + q;
                        if (jj < 0 || jj >= W) continue;
                        const float* xpix = px + (ii * W + jj) * C;
                        const float* krow = pk + (static_cast<std::int64_t>(p) * kw + q) * C;
                        for (int c = 0; c < C; ++c) orow[c] += xpix[c] * krow[c];
                    }
                }
            }
        }
    });
    check_finite(out, "depthwise_conv2d");

    if (track) {
        NodePtr xn = x.node(), kn = kernel.node(), on = out.node();
        Tape::active()->record({on, xn, kn}, [xn, kn, on, H, W, C, kh, kw, ph, pw] {
            const float* g = on->grad.data();
            const float* px = xn->data.data();
            const float* pk = kn->data.data();
            if (xn->requires_grad) {
                float* dx = xn->grad.data();
                parallel_for(H, [&](std::int64_t i0, std::int64_t i1) {
                    for (std::int64_t ii = i0; ii < i1; ++ii) {
                        for (int jj = 0; jj < W; ++jj) {
                            float* dpix = dx + (ii * W + jj) * C;
                            for (int p = 0; p < kh; ++p) {
                                const std::int64_t i = ii + ph - p;
                                if (i < 0 || i >= H) continue;
                                for (int q = 0; q < kw; ++q) {
                                    const std::int64_t j = jj + pw - q;
                                    if (j < 0 || j >= W) continue;
                                    const float* grow = g + (i * W + j) * C;
                                    const float* krow =
                                        pk + (static_cast<std::int64_t>(p) * kw + q) * C;
                                    for (int c = 0; c < C; ++c) dpix[c] += grow[c] * krow[c];
                                }
                            }
                        }
                    }
                });
            }
            if (kn->requires_grad) {
                float* dk = kn->grad.data();
                for (int p = 0; p < kh; ++p) {
                    for (int q = 0; q < kw; ++q) {
                        float* dkrow = dk + (static_cast<std::int64_t>(p) * kw + q) * C;
                        for (std::int64_t i = 0; i < H; ++i) {
                            const std::int64_t ii = i - ph + p;
                            if (ii < 0 || ii >= H) continue;
                            for (std::int64_t j = 0; j < W; ++j) {
                                const std::int64_t jj = j - pw + q;
                                if (jj < 0 || jj >= W) continue;
                                const float* xpix = px + (ii * W + jj) * C;
                                const float* grow = g + (i * W + j) * C;
                                for (int c = 0; c < C; ++c) dkrow[c] += xpix[c] * grow[c];
                            }
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor conv3d(const Tensor& x, const Tensor& kernel, bool zero_pad) {
    require_shape(x.rank() == 4, "conv3d: input must be (D,H,W,Cin)");
    require_shape(kernel.rank() == 5, "conv3d: kernel must be (kd,1,1,Cin,Cout)");
    require_shape(kernel.extent(1) == 1 && kernel.extent(2) == 1,
                  "conv3d: spatial kernel extents must be 1");
    const int D = x.extent(0), Ci = x.extent(3);
    const std::int64_t S = static_cast<std::int64_t>(x.extent(1)) * x.extent(2);  // pixels
    const int kd = kernel.extent(0);
    require_shape(kernel.extent(3) == Ci, "conv3d: kernel Cin mismatch");
    const int Co = kernel.extent(4);
    const int pd = zero_pad ? (kd - 1) / 2 : 0;
    require_shape(D + 2 * pd >= kd, "conv3d: kernel larger than padded depth");
    const int OD = D + 2 * pd - kd + 1;

    const bool track = tracked(x) || tracked(kernel);
    Tensor out = Tensor::zeros({OD, x.extent(1), x.extent(2), Co}, track);
    const float* px = x.data();
    const float* pk = kernel.data();
    float* po = out.data();

    parallel_for(OD, [&](std::int64_t d0, std::int64_t d1) {
        for (std::int64_t od = d0; od < d1; ++od) {
            for (std::int64_t s = 0; s < S; ++s) {
                float* orow = po + (od * S + s) * Co;
                for (int p = 0; p < kd; ++p) {
                    const std::int64_t d = od - pd + p;
                    if (d < 0 || d >= D) continue;
                    const float* xpix = px + (d * S + s) * Ci;
                    const float* krow = pk + (static_cast<std::int64_t>(p) * Ci) * Co;
                    for (int ci = 0; ci < Ci; ++ci) {
                        const float xv = xpix[ci];
                        const float* kc = krow + static_cast<std::int64_t>(ci) * Co;
                        for (int co = 0; co < Co; ++co) orow[co] += xv * kc[co];
                    }
                }
            }
        }
    });
    check_finite(out, "conv3d");

    if (track) {
        NodePtr xn = x.node(), kn = kernel.node(), on = out.node();
        Tape::active()->record({on, xn, kn}, [xn, kn, on, D, S, Ci, kd, Co, pd, OD] {
            const float* g = on->grad.data();
            const float* px = xn->data.data();
            const float* pk = kn->data.data();
            if (xn->requires_grad) {
                float* dx = xn->grad.data();
                parallel_for(D, [&](std::int64_t dd0, std::int64_t dd1) {
                    for (std::int64_t d = dd0; d < dd1; ++d) {
                        for (std::int64_t s = 0; s < S; ++s) {
                            float* dpix = dx + (d * S + s) * Ci;
                            for (int p = 0; p < kd; ++p) {
                                const std::int64_t od = d + pd - p;
                                if (od < 0 || od >= OD) continue;
                                const float* grow = g + (od * S + s) * Co;
                                const float* krow = pk + (static_cast<std::int64_t>(p) * Ci) * Co;
                                for (int ci = 0; ci < Ci; ++ci) {
                                    const float* kc = krow + static_cast<std::int64_t>(ci) * Co;
                                    float acc = 0.0f;
                                    for (int co = 0; co < Co; ++co) acc += grow[co] * kc[co];
                                    dpix[ci] += acc;
                                }
                            }
                        }
                    }
                });
            }
            if (kn->requires_grad) {
                float* dk = kn->grad.data();
                parallel_for(kd, [&](std::int64_t p0, std::int64_t p1) {
                    for (std::int64_t p = p0; p < p1; ++p) {
                        float* dkrow = dk + (p * Ci) * Co;
                        for (std::int64_t od = 0; od < OD; ++od) {
                            const std::int64_t d = od - pd + p;
                            if (d < 0 || d >= D) continue;
                            for (std::int64_t s = 0; s < S; ++s) {
                                const float* xpix = px + (d * S + s) * Ci;
                                const float* grow = g + (od * S + s) * Co;
                                for (int ci = 0; ci < Ci; ++ci) {
                                    const float xv = xpix[ci];
                                    float* dkc = dkrow + static_cast<std::int64_t>(ci) * Co;
                                    for (int co = 0; co < Co; ++co) dkc[co] += xv * grow[co];
                                }
                            }
                        }
                    }
                });
            }
        });
    }
    return out;
}

Tensor maxpool3d(const Tensor& x, int window_d) {
    require_shape(x.rank() == 4, "maxpool3d: input must be (D,H,W,C)");
    require_value(window_d >= 1, "maxpool3d: window must be >= 1");
    const int D = x.extent(0), C = x.extent(3);
    const std::int64_t S = static_cast<std::int64_t>(x.extent(1)) * x.extent(2);
    require_shape(D >= window_d, "maxpool3d: depth smaller than window");
    const int OD = D / window_d;

    const bool track = tracked(x);
    Tensor out = Tensor::zeros({OD, x.extent(1), x.extent(2), C}, track);
    const float* px = x.data();
    float* po = out.data();
    // argmax depth offset per output element; ties keep the first index
    auto arg = std::make_shared<std::vector<std::uint8_t>>(
        static_cast<std::size_t>(OD) * static_cast<std::size_t>(S) * C);

    for (std::int64_t od = 0; od < OD; ++od) {
        for (std::int64_t s = 0; s < S; ++s) {
            float* orow = po + (od * S + s) * C;
            std::uint8_t* arow = arg->data() + (od * S + s) * C;
            for (int c = 0; c < C; ++c) {
                float best = px[((od * window_d) * S + s) * C + c];
                std::uint8_t besti = 0;
                for (int p = 1; p < window_d; ++p) {
                    const float v = px[((od * window_d + p) * S + s) * C + c];
                    if (v > best) {
                        best = v;
                        besti = static_cast<std::uint8_t>(p);
                    }
                }
                orow[c] = best;
                arow[c] = besti;
            }
        }
    }
    check_finite(out, "maxpool3d");

    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, arg, OD, S, C, window_d] {
            const float* g = on->grad.data();
            float* dx = xn->grad.data();
            for (std::int64_t od = 0; od < OD; ++od) {
                for (std::int64_t s = 0; s < S; ++s) {
                    const float* grow = g + (od * S + s) * C;
                    const std::uint8_t* arow = arg->data() + (od * S + s) * C;
                    for (int c = 0; c < C; ++c) {
                        const std::int64_t d = od * window_d + arow[c];
                        dx[(d * S + s) * C + c] += grow[c];
                    }
                }
            }
        });
    }
    return out;
}

Tensor adaptive_avg_pool2d(const Tensor& x, int out_h, int out_w) {
    require_shape(x.rank() == 3, "adaptive_avg_pool2d: input must be (H,W,C)");
    require_value(out_h >= 1 && out_w >= 1, "adaptive_avg_pool2d: output extents must be >= 1");
    const int H = x.extent(0), W = x.extent(1), C = x.extent(2);
    const bool track = tracked(x);
    Tensor out = Tensor::zeros({out_h, out_w, C}, track);
    const float* px = x.data();
    float* po = out.data();

    auto region = [](int o, int in, int on) {
        const int lo = static_cast<int>((static_cast<std::int64_t>(o) * in) / on);
        const int hi = static_cast<int>(((static_cast<std::int64_t>(o) + 1) * in + on - 1) / on);
        return std::pair<int, int>(lo, hi);
    };

    for (int oi = 0; oi < out_h; ++oi) {
        const auto [i0, i1] = region(oi, H, out_h);
        for (int oj = 0; oj < out_w; ++oj) {
            const auto [j0, j1] = region(oj, W, out_w);
            const float inv = 1.0f / (static_cast<float>(i1 - i0) * static_cast<float>(j1 - j0));
            float* orow = po + (static_cast<std::int64_t>(oi) * out_w + oj) * C;
            for (int i = i0; i < i1; ++i) {
                for (int j = j0; j < j1; ++j) {
                    const float* xpix = px + (static_cast<std::int64_t>(i) * W + j) * C;
                    for (int c = 0; c < C; ++c) orow[c] += xpix[c];
                }
            }
            for (int c = 0; c < C; ++c) orow[c] *= inv;
        }
    }
    check_finite(out, "adaptive_avg_pool2d");

    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, H, W, C, out_h, out_w, region] {
            const float* g = on->grad.data();
            float* dx = xn->grad.data();
            for (int oi = 0; oi < out_h; ++oi) {
                const auto [i0, i1] = region(oi, H, out_h);
                for (int oj = 0; oj < out_w; ++oj) {
                    const auto [j0, j1] = region(oj, W, out_w);
                    const float inv =
                        1.0f / (static_cast<float>(i1 - i0) * static_cast<float>(j1 - j0));
                    const float* grow = g + (static_cast<std::int64_t>(oi) * out_w + oj) * C;
                    for (int i = i0; i < i1; ++i) {
                        for (int j = j0; j < j1; ++j) {
                            float* dpix = dx + (static_cast<std::int64_t>(i) * W + j) * C;
                            for (int c = 0; c < C; ++c) dpix[c] += grow[c] * inv;
                        }
                    }
                }
            }
        });
    }
    return out;
}

Tensor bilinear_resize(const Tensor& x, int out_h, int out_w) {
    require_shape(x.rank() == 3, "bilinear_resize: input must be (H,W,C)");
    require_value(out_h >= 1 && out_w >= 1, "bilinear_resize: output extents must be >= 1");
    const int H = x.extent(0), W = x.extent(1), C = x.extent(2);
    const bool track = tracked(x);
    Tensor out = Tensor::zeros({out_h, out_w, C}, track);
    const float* px = x.data();
    float* po = out.data();

    // half-pixel-centres convention; source coordinates clamped to the grid
    auto src_coord = [](int o, int in, int on, int& lo, int& hi, float& frac) {
        float s = (static_cast<float>(o) + 0.5f) * static_cast<float>(in) / static_cast<float>(on) -
                  0.5f;
        if (s < 0.0f) s = 0.0f;
        const float top = static_cast<float>(in - 1);
        if (s > top) s = top;
        lo = static_cast<int>(s);
        hi = lo + 1 < in ? lo + 1 : lo;
        frac = s - static_cast<float>(lo);
    };

    for (int oi = 0; oi < out_h; ++oi) {
        int i0, i1;
        float fi;
        src_coord(oi, H, out_h, i0, i1, fi);
        for (int oj = 0; oj < out_w; ++oj) {
            int j0, j1;
            float fj;
            src_coord(oj, W, out_w, j0, j1, fj);
            const float w00 = (1.0f - fi) * (1.0f - fj);
            const float w01 = (1.0f - fi) * fj;
            const float w10 = fi * (1.0f - fj);
            const float w11 = fi * fj;
            float* orow = po + (static_cast<std::int64_t>(oi) * out_w + oj) * C;
            const float* p00 = px + (static_cast<std::int64_t>(i0) * W + j0) * C;
            const float* p01 = px + (static_cast<std::int64_t>(i0) * W + j1) * C;
            const float* p10 = px + (static_cast<std::int64_t>(i1) * W + j0) * C;
            const float* p11 = px + (static_cast<std::int64_t>(i1) * W + j1) * C;
            for (int c = 0; c < C; ++c)
                orow[c] = w00 * p00[c] + w01 * p01[c] + w10 * p10[c] + w11 * p11[c];
        }
    }
    check_finite(out, "bilinear_resize");

    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, H, W, C, out_h, out_w, src_coord] {
            const float* g = on->grad.data();
            float* dx = xn->grad.data();
            for (int oi = 0; oi < out_h; ++oi) {
                int i0, i1;
                float fi;
                src_coord(oi, H, out_h, i0, i1, fi);
                for (int oj = 0; oj < out_w; ++oj) {
                    int j0, j1;
                    float fj;
                    src_coord(oj, W, out_w, j0, j1, fj);
                    const float w00 = (1.0f - fi) * (1.0f - fj);
                    const float w01 = (1.0f - fi) * fj;
                    const float w10 = fi * (1.0f - fj);
                    const float w11 = fi * fj;
                    const float* grow = g + (static_cast<std::int64_t>(oi) * out_w + oj) * C;
                    float* p00 = dx + (static_cast<std::int64_t>(i0) * W + j0) * C;
                    float* p01 = dx + (static_cast<std::int64_t>(i0) * W + j1) * C;
                    float* p10 = dx + (static_cast<std::int64_t>(i1) * W + j0) * C;
                    float* p11 = dx + (static_cast<std::int64_t>(i1) * W + j1) * C;
                    for (int c = 0; c < C; ++c) {
                        p00[c] += w00 * grow[c];
                        p01[c] += w01 * grow[c];
                        p10[c] += w10 * grow[c];
                        p11[c] += w11 * grow[c];
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace unmix
