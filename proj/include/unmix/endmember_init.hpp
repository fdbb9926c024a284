#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "unmix/hsi_types.hpp"

namespace unmix {

struct InitConfig {
    enum class Method { vca, farthest_point };
    Method method = Method::vca;
    std::uint64_t seed = 0;
    std::optional<float> snr_estimate_override;  // dB

    static Method parse_method(const std::string& name);
};

// Vertex component analysis. Projects pixels to an R-dimensional subspace
// (projective projection when the estimated SNR exceeds 15 + 10*log10(R) dB,
// additive otherwise) and iteratively picks the pixel with the largest
// projection onto a random direction orthogonal to the simplex found so far.
// Returns the selected observed pixel spectra, clamped nonnegative.
EndmemberMatrix vca(const HsiCube& y, int r, std::uint64_t seed,
                    std::optional<float> snr_override = std::nullopt);

// Deterministic fallback: start from the max-norm pixel, then greedily add
// the pixel maximising the minimum spectral angle to the chosen set.
EndmemberMatrix farthest_point_init(const HsiCube& y, int r);

EndmemberMatrix init_endmembers(const HsiCube& y, int r, const InitConfig& cfg);

}  // namespace unmix
