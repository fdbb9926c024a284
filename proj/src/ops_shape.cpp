#include <algorithm>
#include <numeric>

#include "op_common.hpp"
#include "unmix/ops.hpp"

namespace unmix {

using opdetail::NodePtr;

namespace {

std::vector<std::int64_t> row_major_strides(const Shape& s) {
    std::vector<std::int64_t> st(s.size(), 1);
    for (int i = static_cast<int>(s.size()) - 2; i >= 0; --i)
        st[static_cast<std::size_t>(i)] =
            st[static_cast<std::size_t>(i + 1)] * s[static_cast<std::size_t>(i + 1)];
    return st;
}

// out[idx] = in[perm applied to idx]; used both forward and for the inverse
// permutation in backward.
void permute_copy(const float* src, const Shape& src_shape, const std::vector<int>& perm,
                  float* dst) {
    const std::size_t r = src_shape.size();
    Shape dst_shape(r);
    for (std::size_t i = 0; i < r; ++i) dst_shape[i] = src_shape[static_cast<std::size_t>(perm[i])];
    const auto src_strides = row_major_strides(src_shape);
    std::vector<std::int64_t> gather(r);
    for (std::size_t i = 0; i < r; ++i) gather[i] = src_strides[static_cast<std::size_t>(perm[i])];

    const std::int64_t n = shape_numel(dst_shape);
    std::vector<std::int64_t> idx(r, 0);
    std::int64_t src_off = 0;
    for (std::int64_t flat = 0; flat < n; ++flat) {
        dst[flat] = src[src_off];
        for (int ax = static_cast<int>(r) - 1; ax >= 0; --ax) {
            const std::size_t a = static_cast<std::size_t>(ax);
            ++idx[a];
            src_off += gather[a];
            if (idx[a] < dst_shape[a]) break;
            src_off -= gather[a] * dst_shape[a];
            idx[a] = 0;
        }
    }
}

}  // namespace

Tensor permute(const Tensor& x, const std::vector<int>& perm) {
    const std::size_t r = static_cast<std::size_t>(x.rank());
    require_shape(perm.size() == r, "permute: wrong permutation length");
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t i = 0; i < r; ++i)
        require_shape(sorted[i] == static_cast<int>(i), "permute: not a permutation of axes");

    Shape out_shape(r);
    for (std::size_t i = 0; i < r; ++i)
        out_shape[i] = x.shape()[static_cast<std::size_t>(perm[i])];
    const bool track = tracked(x);
    Tensor out = Tensor::zeros(out_shape, track);
    permute_copy(x.data(), x.shape(), perm, out.data());

    if (track) {
        std::vector<int> inv(r);
        for (std::size_t i = 0; i < r; ++i) inv[static_cast<std::size_t>(perm[i])] = static_cast<int>(i);
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, inv, out_shape] {
            std::vector<float> tmp(xn->grad.size());
            permute_copy(on->grad.data(), out_shape, inv, tmp.data());
            float* dx = xn->grad.data();
            for (std::size_t i = 0; i < tmp.size(); ++i) dx[i] += tmp[i];
        });
    }
    return out;
}

Tensor reshape(const Tensor& x, Shape shape) {
    require_shape(shape_numel(shape) == x.numel(),
                  "reshape: element count mismatch " + shape_str(x.shape()) + " -> " +
                      shape_str(shape));
    const bool track = tracked(x);
    Tensor out = Tensor::from_data(std::move(shape), std::vector<float>(x.data(), x.data() + x.numel()), track);
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on] {
            float* dx = xn->grad.data();
            const float* g = on->grad.data();
            for (std::size_t i = 0; i < xn->grad.size(); ++i) dx[i] += g[i];
        });
    }
    return out;
}

Tensor slice_last(const Tensor& x, int start, int len) {
    const std::int64_t c = x.shape().back();
    require_shape(start >= 0 && len >= 1 && start + len <= c, "slice_last: range out of bounds");
    Shape out_shape = x.shape();
    out_shape.back() = len;
    const bool track = tracked(x);
    Tensor out = Tensor::zeros(out_shape, track);
    const std::int64_t rows = opdetail::leading_numel(x.shape());
    const float* px = x.data();
    float* po = out.data();
    for (std::int64_t r = 0; r < rows; ++r)
        for (int j = 0; j < len; ++j) po[r * len + j] = px[r * c + start + j];
    if (track) {
        NodePtr xn = x.node(), on = out.node();
        Tape::active()->record({on, xn}, [xn, on, rows, c, start, len] {
            const float* g = on->grad.data();
            float* dx = xn->grad.data();
            for (std::int64_t r = 0; r < rows; ++r)
                for (int j = 0; j < len; ++j) dx[r * c + start + j] += g[r * len + j];
        });
    }
    return out;
}

Tensor concat_last(const std::vector<Tensor>& parts) {
    require_value(!parts.empty(), "concat_last: no inputs");
    const Shape& lead = parts.front().shape();
    std::int64_t total_c = 0;
    bool track = false;
    for (const auto& p : parts) {
        require_shape(p.rank() == parts.front().rank(), "concat_last: rank mismatch");
        for (int a = 0; a + 1 < p.rank(); ++a)
            require_shape(p.extent(a) == lead[static_cast<std::size_t>(a)],
                          "concat_last: leading extents differ");
        total_c += p.shape().back();
        track = track || tracked(p);
    }
    Shape out_shape = lead;
    out_shape.back() = static_cast<int>(total_c);
    Tensor out = Tensor::zeros(out_shape, track);
    const std::int64_t rows = opdetail::leading_numel(out_shape);
    float* po = out.data();
    std::int64_t offset = 0;
    for (const auto& p : parts) {
        const std::int64_t pc = p.shape().back();
        const float* pp = p.data();
        for (std::int64_t r = 0; r < rows; ++r)
            for (std::int64_t j = 0; j < pc; ++j) po[r * total_c + offset + j] = pp[r * pc + j];
        offset += pc;
    }
    if (track) {
        std::vector<NodePtr> nodes;
        std::vector<std::int64_t> widths;
        std::vector<NodePtr> touched;
        touched.push_back(out.node());
        for (const auto& p : parts) {
            nodes.push_back(p.node());
            widths.push_back(p.shape().back());
            touched.push_back(p.node());
        }
        NodePtr on = out.node();
        Tape::active()->record(std::move(touched), [nodes, widths, on, rows, total_c] {
            const float* g = on->grad.data();
            std::int64_t offset = 0;
            for (std::size_t k = 0; k < nodes.size(); ++k) {
                const std::int64_t pc = widths[k];
                if (nodes[k]->requires_grad) {
                    float* dp = nodes[k]->grad.data();
                    for (std::int64_t r = 0; r < rows; ++r)
                        for (std::int64_t j = 0; j < pc; ++j)
                            dp[r * pc + j] += g[r * total_c + offset + j];
                }
                offset += pc;
            }
        });
    }
    return out;
}

}  // namespace unmix
