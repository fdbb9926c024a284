#pragma once

#include <cstdint>
#include <optional>

#include "unmix/tensor.hpp"

namespace unmix {

// Observed or reconstructed image, data laid out (rows, cols, bands).
struct HsiCube {
    int rows = 0;
    int cols = 0;
    int bands = 0;
    Tensor data;

    static HsiCube wrap(Tensor t);
    std::int64_t pixel_count() const { return static_cast<std::int64_t>(rows) * cols; }
};

// R pure spectral signatures over L bands; also serves as the decoder weight.
struct EndmemberMatrix {
    int count = 0;  // R
    int bands = 0;  // L
    Tensor values;  // (R, L)

    static EndmemberMatrix wrap(Tensor t);
    // entries >= 0 and no identically-zero row
    void validate() const;
    const float* row(int r) const { return values.data() + static_cast<std::int64_t>(r) * bands; }
};

// Per-pixel mixing fractions (rows, cols, R) under ANC/ASC.
struct AbundanceTensor {
    Tensor values;

    int channels() const { return values.extent(2); }
    void validate(float tol = 1e-5f) const;
};

// Per-pixel PPNMM coefficient b as a single-channel map (rows, cols, 1).
struct NonlinearField {
    Tensor values;
};

// GBM pairwise coefficients beta_ij for i<j, flattened to R(R-1)/2 channels.
struct GbmCoefficients {
    Tensor beta;
};

// snr_db empty means "clean" (no noise is added).
struct NoiseSpec {
    std::optional<float> snr_db;
    std::uint64_t seed = 0;
};

}  // namespace unmix
