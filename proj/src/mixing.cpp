#include "unmix/mixing.hpp"

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

#include "unmix/linalg.hpp"
#include "unmix/ops.hpp"
#include "unmix/rng.hpp"

namespace unmix {

MixModel parse_mix_model(const std::string& name) {
    if (name == "lmm") return MixModel::lmm;
    if (name == "gbm") return MixModel::gbm;
    if (name == "ppnmm") return MixModel::ppnmm;
    throw ValueError("unknown mixing model '" + name + "' (expected lmm, gbm or ppnmm)");
}

std::string mix_model_name(MixModel m) {
    switch (m) {
        case MixModel::lmm: return "lmm";
        case MixModel::gbm: return "gbm";
        case MixModel::ppnmm: return "ppnmm";
    }
    return "?";
}

double spectral_angle(std::span<const float> a, std::span<const float> b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    require_value(na > 0.0 && nb > 0.0, "spectral_angle: zero-norm spectrum");
    double c = dot / (std::sqrt(na) * std::sqrt(nb));
    c = std::min(1.0, std::max(-1.0, c));
    return std::acos(c);
}

namespace {

void check_abundance_vector(std::span<const float> a) {
    float sum = 0.0f;
    for (float v : a) {
        require_value(v >= 0.0f, "abundance vector violates nonnegativity");
        sum += v;
    }
    require_value(std::abs(sum - 1.0f) <= 1e-5f, "abundance vector violates sum-to-one");
}

}  // namespace

std::vector<float> lmm_pixel(const EndmemberMatrix& m, std::span<const float> abundance) {
    require_shape(static_cast<int>(abundance.size()) == m.count,
                  "lmm_pixel: abundance length must equal endmember count");
    check_abundance_vector(abundance);
    std::vector<float> y(static_cast<std::size_t>(m.bands), 0.0f);
    for (int r = 0; r < m.count; ++r) {
        const float a = abundance[static_cast<std::size_t>(r)];
        const float* mr = m.row(r);
        for (int l = 0; l < m.bands; ++l) y[static_cast<std::size_t>(l)] += a * mr[l];
    }
    return y;
}

std::vector<float> ppnmm_pixel(const EndmemberMatrix& m, std::span<const float> abundance,
                               float b) {
    std::vector<float> y = lmm_pixel(m, abundance);
    for (float& v : y) v = v + b * v * v;
    return y;
}

std::vector<float> gbm_pixel(const EndmemberMatrix& m, std::span<const float> abundance,
                             std::span<const float> beta) {
    const int r = m.count;
    require_shape(static_cast<int>(beta.size()) == r * (r - 1) / 2,
                  "gbm_pixel: beta length must be R(R-1)/2");
    for (float bv : beta) require_value(bv >= 0.0f && bv <= 1.0f, "gbm_pixel: beta out of [0,1]");
    std::vector<float> y = lmm_pixel(m, abundance);
    std::size_t t = 0;
    for (int i = 0; i < r - 1; ++i) {
        for (int j = i + 1; j < r; ++j, ++t) {
            const float w = beta[t] * abundance[static_cast<std::size_t>(i)] *
                            abundance[static_cast<std::size_t>(j)];
            if (w == 0.0f) continue;
            const float* mi = m.row(i);
            const float* mj = m.row(j);
            for (int l = 0; l < m.bands; ++l) y[static_cast<std::size_t>(l)] += w * mi[l] * mj[l];
        }
    }
    return y;
}

HsiCube ppnmm_image(const AbundanceTensor& a, const EndmemberMatrix& m, const NonlinearField& b) {
    require_shape(a.values.extent(2) == m.count, "ppnmm_image: abundance channels != R");
    require_shape(b.values.rank() == 3 && b.values.extent(2) == 1,
                  "ppnmm_image: b field must be (rows,cols,1)");
    require_shape(b.values.extent(0) == a.values.extent(0) &&
                      b.values.extent(1) == a.values.extent(1),
                  "ppnmm_image: spatial extents of A and B differ");
    Tensor lin = mode3_product(a.values, m.values);
    Tensor y = add(lin, broadcast_field_mul(b.values, hadamard(lin, lin)));
    return HsiCube::wrap(std::move(y));
}

AbundanceTensor gen_abundance_field(int rows, int cols, int r, float smoothness,
                                    std::uint64_t seed) {
    require_value(r >= 2, "gen_abundance_field: R must be >= 2");
    require_value(rows >= 1 && cols >= 1, "gen_abundance_field: bad extents");

    const int ph = linalg::next_pow2(rows);
    const int pw = linalg::next_pow2(cols);
    Rng master(seed);

    Tensor fields = Tensor::zeros({rows, cols, r});
    float* pf = fields.data();

    for (int ch = 0; ch < r; ++ch) {
        Rng rng = master.split(static_cast<std::uint64_t>(ch) + 1);
        // white noise on the padded grid
        std::vector<std::complex<double>> grid(static_cast<std::size_t>(ph) * pw);
        for (auto& g : grid) g = std::complex<double>(rng.gaussian(), 0.0);

        // 2-D FFT: rows then columns
        std::vector<std::complex<double>> line(static_cast<std::size_t>(std::max(ph, pw)));
        for (int i = 0; i < ph; ++i) {
            line.assign(grid.begin() + static_cast<std::ptrdiff_t>(i) * pw,
                        grid.begin() + static_cast<std::ptrdiff_t>(i + 1) * pw);
            linalg::fft_inplace(line, false);
            std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::ptrdiff_t>(i) * pw);
        }
        std::vector<std::complex<double>> col(static_cast<std::size_t>(ph));
        for (int j = 0; j < pw; ++j) {
            for (int i = 0; i < ph; ++i) col[static_cast<std::size_t>(i)] = grid[static_cast<std::size_t>(i) * pw + j];
            linalg::fft_inplace(col, false);
            for (int i = 0; i < ph; ++i) grid[static_cast<std::size_t>(i) * pw + j] = col[static_cast<std::size_t>(i)];
        }

        // power-law filter |k|^-smoothness, zero DC (filter is symmetric in k
        // so the inverse transform stays real)
        for (int i = 0; i < ph; ++i) {
            const int fi = i <= ph / 2 ? i : i - ph;
            const double ky = static_cast<double>(fi) / ph;
            for (int j = 0; j < pw; ++j) {
                const int fj = j <= pw / 2 ? j : j - pw;
                const double kx = static_cast<double>(fj) / pw;
                const double k = std::sqrt(kx * kx + ky * ky);
                const double f = k > 0.0 ? std::pow(k, -static_cast<double>(smoothness)) : 0.0;
                grid[static_cast<std::size_t>(i) * pw + j] *= f;
            }
        }

        for (int i = 0; i < ph; ++i) {
            line.assign(grid.begin() + static_cast<std::ptrdiff_t>(i) * pw,
                        grid.begin() + static_cast<std::ptrdiff_t>(i + 1) * pw);
            linalg::fft_inplace(line, true);
            std::copy(line.begin(), line.end(), grid.begin() + static_cast<std::ptrdiff_t>(i) * pw);
        }
        for (int j = 0; j < pw; ++j) {
            for (int i = 0; i < ph; ++i) col[static_cast<std::size_t>(i)] = grid[static_cast<std::size_t>(i) * pw + j];
            linalg::fft_inplace(col, true);
            for (int i = 0; i < ph; ++i) grid[static_cast<std::size_t>(i) * pw + j] = col[static_cast<std::size_t>(i)];
        }

        // crop and normalise to zero mean / unit variance, then raise the
        // contrast so the softmax carves distinct material regions with
        // near-pure interiors (piecewise character; pure pixels exist)
        constexpr double kContrast = 2.5;
        double mean = 0.0;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) mean += grid[static_cast<std::size_t>(i) * pw + j].real();
        mean /= static_cast<double>(rows) * cols;
        double var = 0.0;
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j) {
                const double d = grid[static_cast<std::size_t>(i) * pw + j].real() - mean;
                var += d * d;
            }
        var /= static_cast<double>(rows) * cols;
        const double gain = kContrast * (var > 0.0 ? 1.0 / std::sqrt(var) : 1.0);
        for (int i = 0; i < rows; ++i)
            for (int j = 0; j < cols; ++j)
                pf[(static_cast<std::int64_t>(i) * cols + j) * r + ch] = static_cast<float>(
                    (grid[static_cast<std::size_t>(i) * pw + j].real() - mean) * gain);
    }

    AbundanceTensor out;
    out.values = scaled_softmax(fields, 1.0f);
    return out;
}

EndmemberMatrix gen_endmembers(int r, int bands, std::uint64_t seed) {
    require_value(r >= 1 && bands >= 1, "gen_endmembers: bad extents");
    require_value(r <= bands, "gen_endmembers: R must not exceed L");
    constexpr double kMinAngle = 0.1;
    constexpr int kMaxDraws = 1000;

    Rng rng(seed);
    std::vector<std::vector<float>> accepted;
    accepted.reserve(static_cast<std::size_t>(r));

    int draws = 0;
    while (static_cast<int>(accepted.size()) < r) {
        if (++draws > kMaxDraws)
            throw ValueError("gen_endmembers: rejection failed after 1000 draws (R too large for L)");
        const int bumps = 3 + static_cast<int>(rng.uniform_index(4));  // 3..6
        std::vector<float> spec(static_cast<std::size_t>(bands), 0.0f);
        for (int b = 0; b < bumps; ++b) {
            const float centre = rng.uniform();
            const float width = rng.uniform(0.05f, 0.30f);
            const float amp = rng.uniform(0.3f, 1.0f);
            for (int l = 0; l < bands; ++l) {
                const float x = bands > 1 ? static_cast<float>(l) / static_cast<float>(bands - 1)
                                          : 0.5f;
                const float d = (x - centre) / width;
                spec[static_cast<std::size_t>(l)] += amp * std::exp(-0.5f * d * d);
            }
        }
        // reflectance-like: each signature peaks at a varied sub-unit maximum
        const float target_peak = rng.uniform(0.75f, 1.0f);
        float peak = 0.0f;
        for (float v : spec) peak = std::max(peak, v);
        for (float& v : spec) v *= target_peak / peak;  // values in (0,1], never 0

        bool ok = true;
        for (const auto& prev : accepted) {
            if (spectral_angle(prev, spec) < kMinAngle) {
                ok = false;
                break;
            }
        }
        if (ok) accepted.push_back(std::move(spec));
    }

    std::vector<float> flat;
    flat.reserve(static_cast<std::size_t>(r) * bands);
    for (const auto& spec : accepted) flat.insert(flat.end(), spec.begin(), spec.end());
    return EndmemberMatrix::wrap(Tensor::from_data({r, bands}, std::move(flat)));
}

EndmemberMatrix load_endmembers(const std::filesystem::path& csv_path) {
    std::ifstream in(csv_path);
    if (!in) throw IoError("cannot open endmember CSV " + csv_path.string());
    std::vector<float> flat;
    int cols = -1;
    int rows = 0;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        int n = 0;
        while (std::getline(ss, cell, ',')) {
            std::size_t used = 0;
            float v = 0.0f;
            try {
                v = std::stof(cell, &used);
            } catch (const std::exception&) {
                throw ValueError("endmember CSV: non-numeric cell '" + cell + "' on row " +
                                 std::to_string(rows));
            }
            while (used < cell.size() && std::isspace(static_cast<unsigned char>(cell[used]))) ++used;
            require_value(used == cell.size(),
                          "endmember CSV: non-numeric cell '" + cell + "' on row " +
                              std::to_string(rows));
            require_value(v >= 0.0f, "endmember CSV: negative entry on row " + std::to_string(rows));
            flat.push_back(v);
            ++n;
        }
        if (cols < 0) cols = n;
        require_value(n == cols, "endmember CSV: ragged row " + std::to_string(rows));
        ++rows;
    }
    require_value(rows >= 1 && cols >= 1, "endmember CSV: no data in " + csv_path.string());
    return EndmemberMatrix::wrap(Tensor::from_data({rows, cols}, std::move(flat)));
}

HsiCube add_noise_snr(const HsiCube& y, const NoiseSpec& spec) {
    if (!spec.snr_db.has_value()) {
        return HsiCube::wrap(y.data.detached_copy());
    }
    require_value(std::isfinite(*spec.snr_db), "add_noise_snr: snr_db must be finite");
    const std::int64_t n = y.data.numel();
    const float* p = y.data.data();
    double power = 0.0;
    for (std::int64_t i = 0; i < n; ++i) power += static_cast<double>(p[i]) * p[i];
    power /= static_cast<double>(n);
    const double sigma = std::sqrt(power * std::pow(10.0, -static_cast<double>(*spec.snr_db) / 10.0));

    Rng rng(spec.seed);
    std::vector<float> noisy(static_cast<std::size_t>(n));
    for (std::int64_t i = 0; i < n; ++i)
        noisy[static_cast<std::size_t>(i)] =
            p[i] + static_cast<float>(sigma * static_cast<double>(rng.gaussian()));
    return HsiCube::wrap(Tensor::from_data(y.data.shape(), std::move(noisy)));
}

Dataset gen_dataset(MixModel model, int rows, int cols, int r, int bands,
                    std::optional<float> snr_db, std::uint64_t seed, float smoothness) {
    require_value(rows >= 1 && cols >= 1 && r >= 2 && bands >= 1, "gen_dataset: bad extents");
    Rng master(seed);
    const std::uint64_t seed_end = master.split(1).next_u64();
    const std::uint64_t seed_abund = master.split(2).next_u64();
    const std::uint64_t seed_coeff = master.split(3).next_u64();
    const std::uint64_t seed_noise = master.split(4).next_u64();

    Dataset ds;
    ds.endmembers = gen_endmembers(r, bands, seed_end);
    ds.abundance = gen_abundance_field(rows, cols, r, smoothness, seed_abund);

    const std::int64_t pixels = static_cast<std::int64_t>(rows) * cols;
    Rng coeff_rng(seed_coeff);

    HsiCube clean;
    switch (model) {
        case MixModel::lmm: {
            clean = HsiCube::wrap(mode3_product(ds.abundance.values, ds.endmembers.values));
            break;
        }
        case MixModel::ppnmm: {
            std::vector<float> b(static_cast<std::size_t>(pixels));
            for (auto& v : b) v = coeff_rng.uniform(-0.3f, 0.3f);
            NonlinearField f;
            f.values = Tensor::from_data({rows, cols, 1}, std::move(b));
            clean = ppnmm_image(ds.abundance, ds.endmembers, f);
            ds.bfield = std::move(f);
            break;
        }
        case MixModel::gbm: {
            const int pairs = r * (r - 1) / 2;
            std::vector<float> beta(static_cast<std::size_t>(pixels * pairs));
            for (auto& v : beta) v = coeff_rng.uniform();
            Tensor cube = Tensor::zeros({rows, cols, bands});
            float* pc = cube.data();
            const float* pa = ds.abundance.values.data();
            for (std::int64_t px = 0; px < pixels; ++px) {
                const auto y = gbm_pixel(ds.endmembers, {pa + px * r, static_cast<std::size_t>(r)},
                                         {beta.data() + px * pairs, static_cast<std::size_t>(pairs)});
                std::copy(y.begin(), y.end(), pc + px * bands);
            }
            GbmCoefficients g;
            g.beta = Tensor::from_data({rows, cols, pairs}, std::move(beta));
            ds.gbm_coeffs = std::move(g);
            clean = HsiCube::wrap(std::move(cube));
            break;
        }
    }

    ds.cube = add_noise_snr(clean, NoiseSpec{snr_db, seed_noise});
    return ds;
}

}  // namespace unmix
