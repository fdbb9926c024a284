#include <cmath>

#include "op_common.hpp"
#include "unmix/ops.hpp"
#include "unmix/parallel.hpp"

namespace unmix {

using opdetail::NodePtr;

// Sliding-window dilated attention, Q/K/V of shape (H,W,d). For the query at
// (i,j) the key/value set is {(i+p*rate, j+q*rate)} over the window offsets;
// out-of-bounds positions are excluded from the softmax rather than padded.
Tensor swda(const Tensor& q, const Tensor& k, const Tensor& v, int rate, int window) {
    require_shape(q.rank() == 3 && q.shape() == k.shape() && q.shape() == v.shape(),
                  "swda: q/k/v must share shape (H,W,d)");
    require_value(rate >= 1, "swda: rate must be >= 1");
    require_value(window >= 1 && window % 2 == 1, "swda: window must be odd and >= 1");
    const int H = q.extent(0), W = q.extent(1), d = q.extent(2);
    const int half = (window - 1) / 2;
    const int wsel = window * window;
    const std::int64_t n = static_cast<std::int64_t>(H) * W;
    const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(d));

    const bool track = tracked(q) || tracked(k) || tracked(v);
    Tensor out = Tensor::zeros(q.shape(), track);
    const float* pq = q.data();
    const float* pk = k.data();
    const float* pv = v.data();
    float* po = out.data();

    // softmax weights per (query, window slot); masked slots stay 0
    auto alpha = std::make_shared<std::vector<float>>(static_cast<std::size_t>(n) * wsel, 0.0f);

    parallel_for(H, [&](std::int64_t i0, std::int64_t i1) {
        std::vector<float> logits(static_cast<std::size_t>(wsel));
        std::vector<std::int64_t> sel(static_cast<std::size_t>(wsel));
        for (std::int64_t i = i0; i < i1; ++i) {
            for (int j = 0; j < W; ++j) {
                const std::int64_t qpos = i * W + j;
                const float* qrow = pq + qpos * d;
                int cnt = 0;
                float maxlog = 0.0f;
                for (int p = -half; p <= half; ++p) {
                    const std::int64_t ki = i + static_cast<std::int64_t>(p) * rate;
                    if (ki < 0 || ki >= H) continue;
                    for (int s = -half; s <= half; ++s) {
                        const std::int64_t kj = j + static_cast<std::int64_t>(s) * rate;
                        if (kj < 0 || kj >= W) continue;
                        const std::int64_t kpos = ki * W + kj;
                        const float* krow = pk + kpos * d;
                        float dot = 0.0f;
                        for (int c = 0; c < d; ++c) dot += qrow[c] * krow[c];
                        const float lg = dot * inv_sqrt_d;
                        const int slot = (p + half) * window + (s + half);
                        logits[static_cast<std::size_t>(cnt)] = lg;
                        sel[static_cast<std::size_t>(cnt)] = kpos * wsel + slot;  // packed
                        maxlog = cnt == 0 ? lg : std::max(maxlog, lg);
                        ++cnt;
                    }
                }
                double denom = 0.0;
                for (int t = 0; t < cnt; ++t) {
                    logits[static_cast<std::size_t>(t)] =
                        std::exp(logits[static_cast<std::size_t>(t)] - maxlog);
                    denom += logits[static_cast<std::size_t>(t)];
                }
                const float inv = static_cast<float>(1.0 / denom);
                float* orow = po + qpos * d;
                float* arow = alpha->data() + qpos * wsel;
                for (int t = 0; t < cnt; ++t) {
                    const float a = logits[static_cast<std::size_t>(t)] * inv;
                    const std::int64_t packed = sel[static_cast<std::size_t>(t)];
                    const std::int64_t kpos = packed / wsel;
                    const int slot = static_cast<int>(packed % wsel);
                    arow[slot] = a;
                    const float* vrow = pv + kpos * d;
                    for (int c = 0; c < d; ++c) orow[c] += a * vrow[c];
                }
            }
        }
    });
    check_finite(out, "swda");

    if (track) {
        NodePtr qn = q.node(), kn = k.node(), vn = v.node(), on = out.node();
        Tape::active()->record({on, qn, kn, vn}, [qn, kn, vn, on, alpha, H, W, d, rate, window,
                                                  half, wsel, inv_sqrt_d] {
            const float* g = on->grad.data();
            const float* pq = qn->data.data();
            const float* pk = kn->data.data();
            const float* pv = vn->data.data();
            const std::int64_t n = static_cast<std::int64_t>(H) * W;

            // pass 1 per query: dz (softmax jacobian applied) and dq
            std::vector<float> dz(static_cast<std::size_t>(n) * wsel, 0.0f);
            parallel_for(H, [&](std::int64_t i0, std::int64_t i1) {
                for (std::int64_t i = i0; i < i1; ++i) {
                    for (int j = 0; j < W; ++j) {
                        const std::int64_t qpos = i * W + j;
                        const float* grow = g + qpos * d;
                        const float* arow = alpha->data() + qpos * wsel;
                        float* dzrow = dz.data() + qpos * wsel;
                        double sum_ac = 0.0;
                        for (int p = -half; p <= half; ++p) {
                            const std::int64_t ki = i + static_cast<std::int64_t>(p) * rate;
                            if (ki < 0 || ki >= H) continue;
                            for (int s = -half; s <= half; ++s) {
                                const std::int64_t kj = j + static_cast<std::int64_t>(s) * rate;
                                if (kj < 0 || kj >= W) continue;
                                const int slot = (p + half) * window + (s + half);
                                const float a = arow[slot];
                                const float* vrow = pv + (ki * W + kj) * d;
                                float cdot = 0.0f;
                                for (int c = 0; c < d; ++c) cdot += grow[c] * vrow[c];
                                dzrow[slot] = cdot;  // temporarily c_s
                                sum_ac += static_cast<double>(a) * cdot;
                            }
                        }
                        const float sac = static_cast<float>(sum_ac);
                        if (qn->requires_grad) {
                            float* dqrow = qn->grad.data() + qpos * d;
                            for (int p = -half; p <= half; ++p) {
                                const std::int64_t ki = i + static_cast<std::int64_t>(p) * rate;
                                if (ki < 0 || ki >= H) continue;
                                for (int s = -half; s <= half; ++s) {
                                    const std::int64_t kj =
                                        j + static_cast<std::int64_t>(s) * rate;
                                    if (kj < 0 || kj >= W) continue;
                                    const int slot = (p + half) * window + (s + half);
                                    const float a = arow[slot];
                                    const float dzv = a * (dzrow[slot] - sac);
                                    dzrow[slot] = dzv;
                                    const float* krow = pk + (ki * W + kj) * d;
                                    const float f = dzv * inv_sqrt_d;
                                    for (int c = 0; c < d; ++c) dqrow[c] += f * krow[c];
                                }
                            }
                        } else {
                            for (int slot = 0; slot < wsel; ++slot) {
                                const float a = arow[slot];
                                dzrow[slot] = a * (dzrow[slot] - sac);
                            }
                        }
                    }
                }
            });

            // pass 2 per key/value position: reverse the window geometry
            if (kn->requires_grad || vn->requires_grad) {
                parallel_for(H, [&](std::int64_t a0, std::int64_t a1) {
                    for (std::int64_t ai = a0; ai < a1; ++ai) {
                        for (int aj = 0; aj < W; ++aj) {
                            const std::int64_t kpos = ai * W + aj;
                            float* dkrow = kn->requires_grad ? kn->grad.data() + kpos * d : nullptr;
                            float* dvrow = vn->requires_grad ? vn->grad.data() + kpos * d : nullptr;
                            for (int p = -half; p <= half; ++p) {
                                const std::int64_t qi = ai - static_cast<std::int64_t>(p) * rate;
                                if (qi < 0 || qi >= H) continue;
                                for (int s = -half; s <= half; ++s) {
                                    const std::int64_t qj =
                                        aj - static_cast<std::int64_t>(s) * rate;
                                    if (qj < 0 || qj >= W) continue;
                                    const std::int64_t qpos = qi * W + qj;
                                    const int slot = (p + half) * window + (s + half);
                                    if (dkrow) {
                                        const float dzv =
                                            dz[static_cast<std::size_t>(qpos * wsel + slot)];
                                        if (dzv != 0.0f) {
                                            const float* qrow = pq + qpos * d;
                                            const float f = dzv * inv_sqrt_d;
                                            for (int c = 0; c < d; ++c) dkrow[c] += f * qrow[c];
                                        }
                                    }
                                    if (dvrow) {
                                        const float a =
                                            (*alpha)[static_cast<std::size_t>(qpos * wsel + slot)];
                                        if (a != 0.0f) {
                                            const float* grow = g + qpos * d;
                                            for (int c = 0; c < d; ++c) dvrow[c] += a * grow[c];
                                        }
                                    }
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

// Dense softmax attention over all H*W positions (flattened).
Tensor dense_attention(const Tensor& q, const Tensor& k, const Tensor& v) {
    require_shape(q.rank() == 3 && q.shape() == k.shape() && q.shape() == v.shape(),
                  "dense_attention: q/k/v must share shape (H,W,d)");
    const int d = q.extent(2);
    const std::int64_t n = static_cast<std::int64_t>(q.extent(0)) * q.extent(1);
    const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(d));

    const bool track = tracked(q) || tracked(k) || tracked(v);
    Tensor out = Tensor::zeros(q.shape(), track);
    const float* pq = q.data();
    const float* pk = k.data();
    const float* pv = v.data();
    float* po = out.data();

    auto alpha = std::make_shared<std::vector<float>>(static_cast<std::size_t>(n * n));

    parallel_for(n, [&](std::int64_t r0, std::int64_t r1) {
        for (std::int64_t i = r0; i < r1; ++i) {
            const float* qrow = pq + i * d;
            float* arow = alpha->data() + i * n;
            float maxlog = 0.0f;
            for (std::int64_t j = 0; j < n; ++j) {
                const float* krow = pk + j * d;
                float dot = 0.0f;
                for (int c = 0; c < d; ++c) dot += qrow[c] * krow[c];
                arow[j] = dot * inv_sqrt_d;
                maxlog = j == 0 ? arow[j] : std::max(maxlog, arow[j]);
            }
            double denom = 0.0;
            for (std::int64_t j = 0; j < n; ++j) {
                arow[j] = std::exp(arow[j] - maxlog);
                denom += arow[j];
            }
            const float inv = static_cast<float>(1.0 / denom);
            float* orow = po + i * d;
            for (std::int64_t j = 0; j < n; ++j) {
                arow[j] *= inv;
                const float* vrow = pv + j * d;
                const float a = arow[j];
                for (int c = 0; c < d; ++c) orow[c] += a * vrow[c];
            }
        }
    });
    check_finite(out, "dense_attention");

    if (track) {
        NodePtr qn = q.node(), kn = k.node(), vn = v.node(), on = out.node();
        Tape::active()->record({on, qn, kn, vn}, [qn, kn, vn, on, alpha, n, d, inv_sqrt_d] {
            const float* g = on->grad.data();
            const float* pq = qn->data.data();
            const float* pk = kn->data.data();
            const float* pv = vn->data.data();

            std::vector<float> dz(static_cast<std::size_t>(n * n));
            parallel_for(n, [&](std::int64_t r0, std::int64_t r1) {
                for (std::int64_t i = r0; i < r1; ++i) {
                    const float* grow = g + i * d;
                    const float* arow = alpha->data() + i * n;
                    float* dzrow = dz.data() + i * n;
                    double sum_ac = 0.0;
                    for (std::int64_t j = 0; j < n; ++j) {
                        const float* vrow = pv + j * d;
                        float cdot = 0.0f;
                        for (int c = 0; c < d; ++c) cdot += grow[c] * vrow[c];
                        dzrow[j] = cdot;
                        sum_ac += static_cast<double>(arow[j]) * cdot;
                    }
                    const float sac = static_cast<float>(sum_ac);
                    for (std::int64_t j = 0; j < n; ++j) dzrow[j] = arow[j] * (dzrow[j] - sac);
                    if (qn->requires_grad) {
                        float* dqrow = qn->grad.data() + i * d;
                        for (std::int64_t j = 0; j < n; ++j) {
                            const float f = dzrow[j] * inv_sqrt_d;
                            const float* krow = pk + j * d;
                            for (int c = 0; c < d; ++c) dqrow[c] += f * krow[c];
                        }
                    }
                }
            });

            if (kn->requires_grad || vn->requires_grad) {
                parallel_for(n, [&](std::int64_t r0, std::int64_t r1) {
                    for (std::int64_t j = r0; j < r1; ++j) {
                        float* dkrow = kn->requires_grad ? kn->grad.data() + j * d : nullptr;
                        float* dvrow = vn->requires_grad ? vn->grad.data() + j * d : nullptr;
                        for (std::int64_t i = 0; i < n; ++i) {
                            if (dkrow) {
                                const float f = dz[static_cast<std::size_t>(i * n + j)] * inv_sqrt_d;
                                const float* qrow = pq + i * d;
                                for (int c = 0; c < d; ++c) dkrow[c] += f * qrow[c];
                            }
                            if (dvrow) {
                                const float a = (*alpha)[static_cast<std::size_t>(i * n + j)];
                                const float* grow = g + i * d;
                                for (int c = 0; c < d; ++c) dvrow[c] += a * grow[c];
                            }
                        }
                    }
                });
            }
        });
    }
    return out;
}

}  // namespace unmix
