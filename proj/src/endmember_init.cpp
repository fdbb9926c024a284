#include "unmix/endmember_init.hpp"

#include <algorithm>
#include <cmath>

#include "unmix/linalg.hpp"
#include "unmix/mixing.hpp"
#include "unmix/rng.hpp"

namespace unmix {

InitConfig::Method InitConfig::parse_method(const std::string& name) {
    if (name == "vca") return Method::vca;
    if (name == "farthest_point") return Method::farthest_point;
    throw ValueError("unknown init method '" + name + "' (expected vca or farthest_point)");
}

namespace {

// column j of the (rows x cols) row-major matrix m
inline double* col_ptr(std::vector<double>& m, int cols, int r, int c) {
    return &m[static_cast<std::size_t>(r) * cols + c];
}

// Gram-Schmidt orthonormal basis of the given columns of a (dim x count)
// column set stored column-major in `cols`.
std::vector<std::vector<double>> orthonormal_basis(const std::vector<std::vector<double>>& cols) {
    std::vector<std::vector<double>> basis;
    for (const auto& c : cols) {
        std::vector<double> v = c;
        for (const auto& b : basis) {
            double dot = 0.0;
            for (std::size_t i = 0; i < v.size(); ++i) dot += b[i] * v[i];
            for (std::size_t i = 0; i < v.size(); ++i) v[i] -= dot * b[i];
        }
        double norm = 0.0;
        for (double x : v) norm += x * x;
        norm = std::sqrt(norm);
        if (norm > 1e-12) {
            for (double& x : v) x /= norm;
            basis.push_back(std::move(v));
        }
    }
    return basis;
}

}  // namespace

EndmemberMatrix vca(const HsiCube& y, int r, std::uint64_t seed,
                    std::optional<float> snr_override) {
    const int bands = y.bands;
    const std::int64_t pixels = y.pixel_count();
    require_value(r >= 1, "vca: R must be >= 1");
    require_value(r <= bands && r <= pixels, "vca: R must be <= min(L, pixel count)");
    const float* data = y.data.data();

    // R = 1 degenerates (nothing is orthogonal to a 1-D simplex); take the
    // max-norm pixel directly.
    if (r == 1) {
        std::int64_t best = 0;
        double best_norm = -1.0;
        for (std::int64_t p = 0; p < pixels; ++p) {
            double n = 0.0;
            for (int l = 0; l < bands; ++l) {
                const double v = data[p * bands + l];
                n += v * v;
            }
            if (n > best_norm) {
                best_norm = n;
                best = p;
            }
        }
        std::vector<float> spec(data + best * bands, data + (best + 1) * bands);
        for (float& v : spec) v = std::max(0.0f, v);
        return EndmemberMatrix::wrap(Tensor::from_data({1, bands}, std::move(spec)));
    }

    // mean and raw power
    std::vector<double> mean(static_cast<std::size_t>(bands), 0.0);
    double p_y = 0.0;
    for (std::int64_t p = 0; p < pixels; ++p) {
        for (int l = 0; l < bands; ++l) {
            const double v = data[p * bands + l];
            mean[static_cast<std::size_t>(l)] += v;
            p_y += v * v;
        }
    }
    for (double& m : mean) m /= static_cast<double>(pixels);
    p_y /= static_cast<double>(pixels);

    // mean-removed covariance, upper triangle then mirrored
    std::vector<double> cov(static_cast<std::size_t>(bands) * bands, 0.0);
    std::vector<double> centred(static_cast<std::size_t>(bands));
    for (std::int64_t p = 0; p < pixels; ++p) {
        for (int l = 0; l < bands; ++l)
            centred[static_cast<std::size_t>(l)] = data[p * bands + l] - mean[static_cast<std::size_t>(l)];
        for (int i = 0; i < bands; ++i) {
            const double ci = centred[static_cast<std::size_t>(i)];
            double* row = &cov[static_cast<std::size_t>(i) * bands];
            for (int j = i; j < bands; ++j) row[j] += ci * centred[static_cast<std::size_t>(j)];
        }
    }
    for (int i = 0; i < bands; ++i)
        for (int j = i; j < bands; ++j) {
            cov[static_cast<std::size_t>(i) * bands + j] /= static_cast<double>(pixels);
            cov[static_cast<std::size_t>(j) * bands + i] = cov[static_cast<std::size_t>(i) * bands + j];
        }

    std::vector<double> eigvals, eigvecs;
    linalg::sym_eig(cov, bands, eigvals, eigvecs);

    // SNR estimate from the R-dim PCA projection
    double p_x = 0.0;
    {
        double mean_power = 0.0;
        for (double m : mean) mean_power += m * m;
        double proj_power = 0.0;
        for (int k = 0; k < r; ++k) {
            // eigenvalues of the covariance are the per-axis projected powers
            proj_power += eigvals[static_cast<std::size_t>(bands - 1 - k)];
        }
        p_x = proj_power + mean_power;
    }
    double snr_db;
    if (snr_override.has_value()) {
        snr_db = *snr_override;
    } else if (p_y - p_x <= 1e-15 * std::max(1.0, p_y)) {
        snr_db = std::numeric_limits<double>::infinity();
    } else {
        snr_db = 10.0 * std::log10((p_x - (static_cast<double>(r) / bands) * p_y) / (p_y - p_x));
    }
    const double snr_threshold = 15.0 + 10.0 * std::log10(static_cast<double>(r));

    // projected representation y_p (dim r per pixel)
    std::vector<double> rep(static_cast<std::size_t>(pixels) * r);
    if (snr_db > snr_threshold) {
        // projective projection on the top-R subspace of the correlation matrix
        std::vector<double> corr(static_cast<std::size_t>(bands) * bands, 0.0);
        for (std::int64_t p = 0; p < pixels; ++p) {
            for (int i = 0; i < bands; ++i) {
                const double vi = data[p * bands + i];
                double* row = &corr[static_cast<std::size_t>(i) * bands];
                for (int j = i; j < bands; ++j) row[j] += vi * data[p * bands + j];
            }
        }
        for (int i = 0; i < bands; ++i)
            for (int j = i; j < bands; ++j) {
                corr[static_cast<std::size_t>(i) * bands + j] /= static_cast<double>(pixels);
                corr[static_cast<std::size_t>(j) * bands + i] =
                    corr[static_cast<std::size_t>(i) * bands + j];
            }
        std::vector<double> cvals, cvecs;
        linalg::sym_eig(corr, bands, cvals, cvecs);
        require_value(cvals[static_cast<std::size_t>(bands - r)] >
                          1e-9 * std::max(1e-30, cvals[static_cast<std::size_t>(bands - 1)]),
                      "vca: rank deficiency, fewer than R independent pixels");
        // x = Ud^T y, then scale each pixel by <x,u>, u = mean(x)
        std::vector<double> u(static_cast<std::size_t>(r), 0.0);
        for (std::int64_t p = 0; p < pixels; ++p) {
            for (int k = 0; k < r; ++k) {
                double acc = 0.0;
                for (int l = 0; l < bands; ++l)
                    acc += cvecs[static_cast<std::size_t>(l) * bands + (bands - 1 - k)] *
                           data[p * bands + l];
                rep[static_cast<std::size_t>(p) * r + k] = acc;
                u[static_cast<std::size_t>(k)] += acc;
            }
        }
        for (double& v : u) v /= static_cast<double>(pixels);
        for (std::int64_t p = 0; p < pixels; ++p) {
            double denom = 0.0;
            for (int k = 0; k < r; ++k) denom += rep[static_cast<std::size_t>(p) * r + k] * u[static_cast<std::size_t>(k)];
            if (std::abs(denom) < 1e-12) denom = denom >= 0.0 ? 1e-12 : -1e-12;
            for (int k = 0; k < r; ++k) rep[static_cast<std::size_t>(p) * r + k] /= denom;
        }
    } else {
        // additive path: PCA to R-1 dims plus a constant coordinate
        const int d = r - 1;
        require_value(d == 0 || eigvals[static_cast<std::size_t>(bands - d)] >
                                    1e-12 * std::max(1e-30, eigvals[static_cast<std::size_t>(bands - 1)]),
                      "vca: rank deficiency, fewer than R independent pixels");
        double cmax = 0.0;
        for (std::int64_t p = 0; p < pixels; ++p) {
            double norm = 0.0;
            for (int k = 0; k < d; ++k) {
                double acc = 0.0;
                for (int l = 0; l < bands; ++l)
                    acc += eigvecs[static_cast<std::size_t>(l) * bands + (bands - 1 - k)] *
                           (data[p * bands + l] - mean[static_cast<std::size_t>(l)]);
                rep[static_cast<std::size_t>(p) * r + k] = acc;
                norm += acc * acc;
            }
            cmax = std::max(cmax, std::sqrt(norm));
        }
        if (cmax <= 0.0) cmax = 1.0;
        for (std::int64_t p = 0; p < pixels; ++p) rep[static_cast<std::size_t>(p) * r + (r - 1)] = cmax;
    }

    // iterative vertex selection
    Rng rng(seed);
    std::vector<std::vector<double>> found;  // projected vertices, the seed column first
    {
        std::vector<double> seed_col(static_cast<std::size_t>(r), 0.0);
        seed_col[static_cast<std::size_t>(r - 1)] = 1.0;
        found.push_back(std::move(seed_col));
    }
    std::vector<std::int64_t> indices(static_cast<std::size_t>(r), 0);
    for (int i = 0; i < r; ++i) {
        std::vector<double> f(static_cast<std::size_t>(r));
        for (int attempt = 0;; ++attempt) {
            require_value(attempt < 64, "vca: cannot find a direction orthogonal to the simplex");
            for (double& v : f) v = rng.gaussian();
            const auto basis = orthonormal_basis(found);
            for (const auto& b : basis) {
                double dot = 0.0;
                for (int k = 0; k < r; ++k) dot += b[static_cast<std::size_t>(k)] * f[static_cast<std::size_t>(k)];
                for (int k = 0; k < r; ++k) f[static_cast<std::size_t>(k)] -= dot * b[static_cast<std::size_t>(k)];
            }
            double norm = 0.0;
            for (double v : f) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > 1e-9) {
                for (double& v : f) v /= norm;
                break;
            }
        }
        std::int64_t best = 0;
        double best_abs = -1.0;
        for (std::int64_t p = 0; p < pixels; ++p) {
            double dot = 0.0;
            for (int k = 0; k < r; ++k) dot += f[static_cast<std::size_t>(k)] * rep[static_cast<std::size_t>(p) * r + k];
            const double a = std::abs(dot);
            if (a > best_abs) {
                best_abs = a;
                best = p;
            }
        }
        indices[static_cast<std::size_t>(i)] = best;
        std::vector<double> vertex(static_cast<std::size_t>(r));
        for (int k = 0; k < r; ++k) vertex[static_cast<std::size_t>(k)] = rep[static_cast<std::size_t>(best) * r + k];
        if (i == 0) {
            found[0] = std::move(vertex);  // the e_R seed only steers the first draw
        } else {
            found.push_back(std::move(vertex));
        }
    }

    std::vector<float> flat;
    flat.reserve(static_cast<std::size_t>(r) * bands);
    for (int i = 0; i < r; ++i) {
        const float* px = data + indices[static_cast<std::size_t>(i)] * bands;
        for (int l = 0; l < bands; ++l) flat.push_back(std::max(0.0f, px[l]));
    }
    return EndmemberMatrix::wrap(Tensor::from_data({r, bands}, std::move(flat)));
}

EndmemberMatrix farthest_point_init(const HsiCube& y, int r) {
    const int bands = y.bands;
    const std::int64_t pixels = y.pixel_count();
    require_value(r >= 1 && r <= pixels, "farthest_point_init: R must be in [1, pixel count]");
    const float* data = y.data.data();

    std::vector<std::int64_t> chosen;
    {
        std::int64_t best = 0;
        double best_norm = -1.0;
        for (std::int64_t p = 0; p < pixels; ++p) {
            double n = 0.0;
            for (int l = 0; l < bands; ++l) {
                const double v = data[p * bands + l];
                n += v * v;
            }
            if (n > best_norm) {
                best_norm = n;
                best = p;
            }
        }
        require_value(best_norm > 0.0, "farthest_point_init: all pixels are zero");
        chosen.push_back(best);
    }

    while (static_cast<int>(chosen.size()) < r) {
        std::int64_t best = -1;
        double best_min_angle = -1.0;
        for (std::int64_t p = 0; p < pixels; ++p) {
            std::span<const float> cand{data + p * bands, static_cast<std::size_t>(bands)};
            double norm = 0.0;
            for (float v : cand) norm += static_cast<double>(v) * v;
            if (norm <= 0.0) continue;
            double min_angle = std::numeric_limits<double>::infinity();
            for (std::int64_t c : chosen) {
                const double a = spectral_angle(
                    cand, {data + c * bands, static_cast<std::size_t>(bands)});
                min_angle = std::min(min_angle, a);
            }
            if (min_angle > best_min_angle) {
                best_min_angle = min_angle;
                best = p;
            }
        }
        require_value(best >= 0 && best_min_angle > 1e-6,
                      "farthest_point_init: degenerate cube, all remaining pixels coincide");
        chosen.push_back(best);
    }

    std::vector<float> flat;
    flat.reserve(static_cast<std::size_t>(r) * bands);
    for (std::int64_t c : chosen) {
        const float* px = data + c * bands;
        for (int l = 0; l < bands; ++l) flat.push_back(std::max(0.0f, px[l]));
    }
    return EndmemberMatrix::wrap(Tensor::from_data({r, bands}, std::move(flat)));
}

EndmemberMatrix init_endmembers(const HsiCube& y, int r, const InitConfig& cfg) {
    switch (cfg.method) {
        case InitConfig::Method::vca: return vca(y, r, cfg.seed, cfg.snr_estimate_override);
        case InitConfig::Method::farthest_point: return farthest_point_init(y, r);
    }
    throw ValueError("init_endmembers: bad method");
}

}  // namespace unmix
