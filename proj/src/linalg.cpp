#include "unmix/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "unmix/common.hpp"

namespace unmix::linalg {

void sym_eig(const std::vector<double>& a_in, int n, std::vector<double>& eigvals,
             std::vector<double>& eigvecs) {
    require_shape(static_cast<std::int64_t>(a_in.size()) == static_cast<std::int64_t>(n) * n,
                  "sym_eig: matrix size mismatch");
    std::vector<double> a = a_in;
    std::vector<double> v(static_cast<std::size_t>(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i) * n + i] = 1.0;

    auto off_norm = [&] {
        double s = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) {
                const double x = a[static_cast<std::size_t>(p) * n + q];
                s += x * x;
            }
        return std::sqrt(2.0 * s);
    };

    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[static_cast<std::size_t>(i) * n + i]));
    scale = std::max(scale, off_norm());
    const double tol = (scale > 0.0 ? scale : 1.0) * 1e-14;

    for (int sweep = 0; sweep < 100 && off_norm() > tol; ++sweep) {
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = a[static_cast<std::size_t>(p) * n + q];
                if (std::abs(apq) <= tol * 1e-2) continue;
                const double app = a[static_cast<std::size_t>(p) * n + p];
                const double aqq = a[static_cast<std::size_t>(q) * n + q];
                const double theta = (aqq - app) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int i = 0; i < n; ++i) {
                    const double aip = a[static_cast<std::size_t>(i) * n + p];
                    const double aiq = a[static_cast<std::size_t>(i) * n + q];
                    a[static_cast<std::size_t>(i) * n + p] = c * aip - s * aiq;
                    a[static_cast<std::size_t>(i) * n + q] = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    const double api = a[static_cast<std::size_t>(p) * n + i];
                    const double aqi = a[static_cast<std::size_t>(q) * n + i];
                    a[static_cast<std::size_t>(p) * n + i] = c * api - s * aqi;
                    a[static_cast<std::size_t>(q) * n + i] = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    const double vip = v[static_cast<std::size_t>(i) * n + p];
                    const double viq = v[static_cast<std::size_t>(i) * n + q];
                    v[static_cast<std::size_t>(i) * n + p] = c * vip - s * viq;
                    v[static_cast<std::size_t>(i) * n + q] = s * vip + c * viq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int x, int y) {
        return a[static_cast<std::size_t>(x) * n + x] < a[static_cast<std::size_t>(y) * n + y];
    });

    eigvals.assign(static_cast<std::size_t>(n), 0.0);
    eigvecs.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (int j = 0; j < n; ++j) {
        const int src = order[static_cast<std::size_t>(j)];
        eigvals[static_cast<std::size_t>(j)] = a[static_cast<std::size_t>(src) * n + src];
        for (int i = 0; i < n; ++i)
            eigvecs[static_cast<std::size_t>(i) * n + j] = v[static_cast<std::size_t>(i) * n + src];
    }
}

void fft_inplace(std::vector<std::complex<double>>& v, bool inverse) {
    const std::size_t n = v.size();
    require_value(n > 0 && (n & (n - 1)) == 0, "fft: size must be a power of two");
    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(v[i], v[j]);
    }
    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * 3.14159265358979323846 / static_cast<double>(len);
        const std::complex<double> wl(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const auto u = v[i + k];
                const auto t = v[i + k + len / 2] * w;
                v[i + k] = u + t;
                v[i + k + len / 2] = u - t;
                w *= wl;
            }
        }
    }
    if (inverse) {
        const double inv = 1.0 / static_cast<double>(n);
        for (auto& x : v) x *= inv;
    }
}

int next_pow2(int n) {
    int p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace unmix::linalg
