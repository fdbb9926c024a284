#pragma once

#include "unmix/decoder.hpp"
#include "unmix/encoder.hpp"

namespace unmix {

// Full autoencoder: dual-branch encoder producing abundances, PPNMM decoder
// reconstructing the cube from them.
struct DtuNet {
    Encoder encoder;
    Decoder decoder;
    Ablation ablation = Ablation::none;

    DtuNet() = default;
    DtuNet(int bands, int endmembers, const EncoderConfig& cfg, std::uint64_t seed);

    struct Outputs {
        Tensor abundance;  // (H,W,R)
        Tensor y_linear;   // (H,W,L)
        Tensor b_field;    // (H,W,1)
        Tensor y_hat;      // (H,W,L)
    };
    Outputs forward(const Tensor& y) const;

    ParamList params();
    static constexpr const char* kEndmemberParamName = "decoder.endmembers";
};

}  // namespace unmix
