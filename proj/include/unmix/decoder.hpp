#pragma once

#include "unmix/hsi_types.hpp"
#include "unmix/nn.hpp"

namespace unmix {

// PPNMM decoder. The 1x1 "conv" weight (R,L) is the endmember estimate read
// through phi(w) = max(0,w); the nonlinear coefficient field is learned per
// pixel from [Y, Y_lin, Y_lin.*Y_lin] stacked along the spectral axis.
struct Decoder {
    int endmembers = 0;
    int bands = 0;

    Tensor endmember_weights;  // (R,L) param, nonnegative via clamp-on-read

    Conv3dLayer head_stem;    // 5x1x1, 1 -> head width
    Conv3dLayer head_conv1;   // 5x1x1
    Conv3dLayer head_conv2;   // 5x1x1
    Tensor head_mean_weight;  // (1,1), zero init
    LinearLayer head_linear;  // residual features -> 1, zero init

    static constexpr int kHeadWidth = 8;

    Decoder() = default;
    Decoder(int endmembers, int bands, Rng& rng);

    // Y_lin = A x3 max(0, W)
    Tensor linear_mixing(const Tensor& abundance) const;

    // B field (rows, cols, 1); starts at exactly 0 after construction.
    Tensor nonlinear_head(const Tensor& y, const Tensor& y_linear) const;

    // Y_hat = Y_lin + B .* Y_lin .* Y_lin
    static Tensor reconstruct(const Tensor& y_linear, const Tensor& b_field);

    struct Outputs {
        Tensor y_linear;
        Tensor b_field;
        Tensor y_hat;
    };
    Outputs forward(const Tensor& y, const Tensor& abundance) const;

    EndmemberMatrix extract_endmembers() const;  // max(0, W) snapshot
    void set_endmembers(const EndmemberMatrix& m);

    // Residual depth after the two pooling stages: floor(floor(3L/2)/2).
    int residual_depth() const;

    void collect(const std::string& prefix, ParamList& out_params);
};

}  // namespace unmix
