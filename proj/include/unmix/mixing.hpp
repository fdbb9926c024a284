#pragma once

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "unmix/hsi_types.hpp"

namespace unmix {

enum class MixModel { lmm, gbm, ppnmm };

MixModel parse_mix_model(const std::string& name);
std::string mix_model_name(MixModel m);

// y = M^T a
std::vector<float> lmm_pixel(const EndmemberMatrix& m, std::span<const float> abundance);

// y = M^T a + b (M^T a) .* (M^T a)
std::vector<float> ppnmm_pixel(const EndmemberMatrix& m, std::span<const float> abundance, float b);

// y = sum_r a_r m_r + sum_{i<j} beta_ij a_i a_j (m_i .* m_j); beta packed i<j row-major.
std::vector<float> gbm_pixel(const EndmemberMatrix& m, std::span<const float> abundance,
                             std::span<const float> beta);

// Whole-image PPNMM forward: Y = A x3 M + B .* (A x3 M) .* (A x3 M)
HsiCube ppnmm_image(const AbundanceTensor& a, const EndmemberMatrix& m, const NonlinearField& b);

// R Gaussian random fields (power-law filtered white noise, exponent =
// smoothness) squashed per pixel by softmax so ANC/ASC hold by construction.
AbundanceTensor gen_abundance_field(int rows, int cols, int r, float smoothness,
                                    std::uint64_t seed);

// Smooth synthetic spectra (sums of 3..6 Gaussian bumps, values in (0,1]),
// pairwise spectral angle >= 0.1 rad enforced by rejection.
EndmemberMatrix gen_endmembers(int r, int bands, std::uint64_t seed);

// CSV of R rows x L columns, nonnegative, header-free.
EndmemberMatrix load_endmembers(const std::filesystem::path& csv_path);

// Adds i.i.d. zero-mean Gaussian noise with variance mean(Y^2)*10^(-snr/10);
// a clean spec returns the cube unchanged.
HsiCube add_noise_snr(const HsiCube& y, const NoiseSpec& spec);

struct Dataset {
    HsiCube cube;
    AbundanceTensor abundance;
    EndmemberMatrix endmembers;
    std::optional<NonlinearField> bfield;       // ppnmm only
    std::optional<GbmCoefficients> gbm_coeffs;  // gbm only
};

// Full synthetic dataset: endmembers + abundance field + model-specific
// coefficients (b ~ U[-0.3,0.3] per pixel, beta ~ U[0,1] per pixel-pair) +
// forward model + noise. Ground truth is returned alongside the cube.
Dataset gen_dataset(MixModel model, int rows, int cols, int r, int bands,
                    std::optional<float> snr_db, std::uint64_t seed, float smoothness = 2.0f);

// Spectral angle between two vectors, radians; arccos argument clamped.
double spectral_angle(std::span<const float> a, std::span<const float> b);

}  // namespace unmix
