#pragma once

#include <optional>

#include "unmix/attention.hpp"
#include "unmix/hsi_types.hpp"

namespace unmix {

struct EncoderConfig {
    int embed_channels = 108;  // C; head_dim = C/3 at every stage
    float gamma = 1.0f;        // abundance softmax sharpness, >= 1
    int spectral_stages = 0;   // N; 0 resolves to floor(log2(L)) - 3
    int spectral_channels = 16;
    int ca_reduction = 4;
    int window = 3;

    int resolved_spectral_stages(int bands) const;
    void validate(int bands) const;
};

enum class Ablation { none, spatial_only, spectral_only };
Ablation parse_ablation(const std::string& name);
std::string ablation_name(Ablation a);

// Pyramid of attention stages: tokenize -> 2x MSDA(3 heads) -> down ->
// 1x MSDA(6) -> down -> 2x MHSA(12) -> down -> 1x MHSA(24) -> closing layer
// norm -> adaptive average pool to 4x4 -> bilinear resize back -> per-pixel
// linear 8C -> R. The closing norm seals the pre-norm residual stream; the
// stream is unnormalised otherwise and its drift saturates the abundance
// softmax early in training.
struct SpatialBranch {
    OverlappingTokenizer tokenizer;
    TransformerBlock stage1_a, stage1_b;
    DownsampleLayer down1;
    TransformerBlock stage2;
    DownsampleLayer down2;
    TransformerBlock stage3_a, stage3_b;
    DownsampleLayer down3;
    TransformerBlock stage4;
    LayerNormLayer final_norm;
    LinearLayer head;  // 8C -> R

    SpatialBranch() = default;
    SpatialBranch(int bands, int endmembers, const EncoderConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& y) const;  // (H,W,L) -> (H,W,R)
    void collect(const std::string& prefix, ParamList& out_params);
};

// 3-D conv stem + N stages of [conv3d + leaky_relu + maxpool + channel
// attention] along the spectral axis, then the residual depth*channels are
// folded into pixel features and reduced to R by a 3x3 conv.
struct SpectralBranch {
    Conv3dLayer stem;
    ChannelAttentionLayer stem_ca;
    struct Stage {
        Conv3dLayer conv;
        ChannelAttentionLayer ca;
    };
    std::vector<Stage> stages;
    Conv2dLayer out_conv;  // (residual_depth*spectral_channels) -> R

    SpectralBranch() = default;
    SpectralBranch(int bands, int endmembers, const EncoderConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& y) const;  // (H,W,L) -> (H,W,R)
    void collect(const std::string& prefix, ParamList& out_params);
};

// concat -> residual channel attention -> 3x3 conv to R -> scaled softmax.
struct FusionHead {
    ChannelAttentionLayer ca;
    Conv2dLayer conv;
    float gamma = 1.0f;

    FusionHead() = default;
    FusionHead(int endmembers, const EncoderConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& f_spatial, const Tensor& f_spectral) const;
    void collect(const std::string& prefix, ParamList& out_params);
};

struct Encoder {
    EncoderConfig cfg;
    int endmembers = 0;
    SpatialBranch spatial;
    SpectralBranch spectral;
    FusionHead fusion;

    Encoder() = default;
    Encoder(int bands, int endmembers, const EncoderConfig& cfg, Rng& rng);

    // Abundances (H,W,R); an ablated branch contributes zeros and is skipped.
    Tensor forward(const Tensor& y, Ablation ablation = Ablation::none) const;
    void collect(const std::string& prefix, ParamList& out_params);
};

}  // namespace unmix
