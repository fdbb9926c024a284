#include "unmix/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "unmix/mixing.hpp"

namespace unmix {

namespace {

// O(n^3) Hungarian assignment (shortest augmenting path with potentials).
// Returns match[row] = column minimising the total cost.
std::vector<int> hungarian(const std::vector<double>& cost, int n) {
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<double> v(static_cast<std::size_t>(n) + 1, 0.0);
    std::vector<int> way(static_cast<std::size_t>(n) + 1, 0);
    std::vector<int> p(static_cast<std::size_t>(n) + 1, 0);  // p[col] = row assigned to col

    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(static_cast<std::size_t>(n) + 1, inf);
        std::vector<char> used(static_cast<std::size_t>(n) + 1, 0);
        do {
            used[static_cast<std::size_t>(j0)] = 1;
            const int i0 = p[static_cast<std::size_t>(j0)];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) continue;
                const double cur = cost[static_cast<std::size_t>(i0 - 1) * n + (j - 1)] -
                                   u[static_cast<std::size_t>(i0)] - v[static_cast<std::size_t>(j)];
                if (cur < minv[static_cast<std::size_t>(j)]) {
                    minv[static_cast<std::size_t>(j)] = cur;
                    way[static_cast<std::size_t>(j)] = j0;
                }
                if (minv[static_cast<std::size_t>(j)] < delta) {
                    delta = minv[static_cast<std::size_t>(j)];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[static_cast<std::size_t>(j)]) {
                    u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
                    v[static_cast<std::size_t>(j)] -= delta;
                } else {
                    minv[static_cast<std::size_t>(j)] -= delta;
                }
            }
            j0 = j1;
        } while (p[static_cast<std::size_t>(j0)] != 0);
        do {
            const int j1 = way[static_cast<std::size_t>(j0)];
            p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
            j0 = j1;
        } while (j0 != 0);
    }

    std::vector<int> match(static_cast<std::size_t>(n), -1);
    for (int j = 1; j <= n; ++j) {
        if (p[static_cast<std::size_t>(j)] > 0) match[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
    }
    return match;
}

void check_perm(const std::vector<int>& perm, int r) {
    require_value(static_cast<int>(perm.size()) == r, "permutation length must equal R");
    std::vector<char> seen(static_cast<std::size_t>(r), 0);
    for (int v : perm) {
        require_value(v >= 0 && v < r && !seen[static_cast<std::size_t>(v)],
                      "permutation is not a bijection");
        seen[static_cast<std::size_t>(v)] = 1;
    }
}

}  // namespace

std::vector<int> match_endmembers(const EndmemberMatrix& estimated, const EndmemberMatrix& truth) {
    require_shape(estimated.count == truth.count, "match_endmembers: R mismatch");
    require_shape(estimated.bands == truth.bands, "match_endmembers: L mismatch");
    const int r = truth.count;
    std::vector<double> cost(static_cast<std::size_t>(r) * r);
    for (int t = 0; t < r; ++t) {
        for (int e = 0; e < r; ++e) {
            cost[static_cast<std::size_t>(t) * r + e] = spectral_angle(
                {truth.row(t), static_cast<std::size_t>(truth.bands)},
                {estimated.row(e), static_cast<std::size_t>(estimated.bands)});
        }
    }
    return hungarian(cost, r);
}

double rmse_abun(const AbundanceTensor& estimated, const AbundanceTensor& truth,
                 const std::vector<int>& perm) {
    require_shape(estimated.values.shape() == truth.values.shape(), "rmse_abun: shape mismatch");
    const int r = truth.channels();
    check_perm(perm, r);
    const std::int64_t pixels =
        static_cast<std::int64_t>(truth.values.extent(0)) * truth.values.extent(1);
    const float* pe = estimated.values.data();
    const float* pt = truth.values.data();
    double acc = 0.0;
    for (std::int64_t px = 0; px < pixels; ++px) {
        for (int t = 0; t < r; ++t) {
            const double d = static_cast<double>(pe[px * r + perm[static_cast<std::size_t>(t)]]) -
                             pt[px * r + t];
            acc += d * d;
        }
    }
    return std::sqrt(acc / (static_cast<double>(pixels) * r));
}

double sad_end(const EndmemberMatrix& estimated, const EndmemberMatrix& truth,
               const std::vector<int>& perm) {
    require_shape(estimated.count == truth.count && estimated.bands == truth.bands,
                  "sad_end: extent mismatch");
    check_perm(perm, truth.count);
    double acc = 0.0;
    for (int t = 0; t < truth.count; ++t) {
        acc += spectral_angle({truth.row(t), static_cast<std::size_t>(truth.bands)},
                              {estimated.row(perm[static_cast<std::size_t>(t)]),
                               static_cast<std::size_t>(estimated.bands)});
    }
    return acc / truth.count;
}

double rmse_b(const NonlinearField& estimated, const NonlinearField& truth) {
    require_shape(estimated.values.shape() == truth.values.shape(), "rmse_b: shape mismatch");
    const std::int64_t n = truth.values.numel();
    const float* pe = estimated.values.data();
    const float* pt = truth.values.data();
    double acc = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pe[i]) - pt[i];
        acc += d * d;
    }
    return std::sqrt(acc / static_cast<double>(n));
}

Histogram b_histogram(const NonlinearField& b, int bins) {
    require_value(bins >= 1, "b_histogram: bins must be >= 1");
    const std::int64_t n = b.values.numel();
    const float* p = b.values.data();
    float lo = p[0], hi = p[0];
    for (std::int64_t i = 1; i < n; ++i) {
        lo = std::min(lo, p[i]);
        hi = std::max(hi, p[i]);
    }
    Histogram h;
    h.bin_centers.resize(static_cast<std::size_t>(bins));
    h.counts.assign(static_cast<std::size_t>(bins), 0);
    const double width = (static_cast<double>(hi) - lo) / bins;
    for (int i = 0; i < bins; ++i)
        h.bin_centers[static_cast<std::size_t>(i)] = lo + width * (i + 0.5);
    if (width <= 0.0) {
        // constant field: everything lands in the first bin
        h.bin_centers.assign(static_cast<std::size_t>(bins), static_cast<double>(lo));
        h.counts[0] = n;
        return h;
    }
    for (std::int64_t i = 0; i < n; ++i) {
        int idx = static_cast<int>((static_cast<double>(p[i]) - lo) / width);
        idx = std::clamp(idx, 0, bins - 1);
        ++h.counts[static_cast<std::size_t>(idx)];
    }
    return h;
}

}  // namespace unmix
