#include "unmix/encoder.hpp"

#include <cmath>

namespace unmix {

int EncoderConfig::resolved_spectral_stages(int bands) const {
    if (spectral_stages > 0) return spectral_stages;
    const int n = static_cast<int>(std::floor(std::log2(static_cast<double>(bands)))) - 3;
    return std::max(1, n);
}

void EncoderConfig::validate(int bands) const {
    require_value(embed_channels >= 3 && embed_channels % 3 == 0,
                  "encoder: C must be a positive multiple of 3 (head_dim = C/3)");
    require_value(gamma >= 1.0f, "encoder: gamma must be >= 1");
    require_value(spectral_channels >= 1, "encoder: spectral_channels must be >= 1");
    require_value(ca_reduction >= 1, "encoder: ca_reduction must be >= 1");
    require_value(window >= 1 && window % 2 == 1, "encoder: window must be odd");
    const int n = resolved_spectral_stages(bands);
    require_value(bands >= (1 << n), "encoder: L must be >= 2^N for N spectral stages");
}

Ablation parse_ablation(const std::string& name) {
    if (name == "none") return Ablation::none;
    if (name == "spectral") return Ablation::spatial_only;  // the spectral branch is zeroed
    if (name == "spatial") return Ablation::spectral_only;  // the spatial branch is zeroed
    throw ValueError("unknown ablation '" + name + "' (expected none, spatial or spectral)");
}

std::string ablation_name(Ablation a) {
    switch (a) {
        case Ablation::none: return "none";
        case Ablation::spatial_only: return "spectral";
        case Ablation::spectral_only: return "spatial";
    }
    return "?";
}

SpatialBranch::SpatialBranch(int bands, int endmembers, const EncoderConfig& cfg, Rng& rng) {
    const int c = cfg.embed_channels;
    const int d = c / 3;
    tokenizer = OverlappingTokenizer(bands, c, rng);
    const auto msda3 = AttentionConfig::multi_scale(3, d, cfg.window);
    const auto msda6 = AttentionConfig::multi_scale(6, d, cfg.window);
    const auto mhsa12 = AttentionConfig::multi_scale(12, d, cfg.window);
    const auto mhsa24 = AttentionConfig::multi_scale(24, d, cfg.window);
    stage1_a = TransformerBlock(AttentionCore::Mode::sliding, msda3, rng);
    stage1_b = TransformerBlock(AttentionCore::Mode::sliding, msda3, rng);
    down1 = DownsampleLayer(c, rng);
    stage2 = TransformerBlock(AttentionCore::Mode::sliding, msda6, rng);
    down2 = DownsampleLayer(2 * c, rng);
    stage3_a = TransformerBlock(AttentionCore::Mode::dense, mhsa12, rng);
    stage3_b = TransformerBlock(AttentionCore::Mode::dense, mhsa12, rng);
    down3 = DownsampleLayer(4 * c, rng);
    stage4 = TransformerBlock(AttentionCore::Mode::dense, mhsa24, rng);
    final_norm = LayerNormLayer(8 * c);
    head = LinearLayer(8 * c, endmembers, rng);
}

Tensor SpatialBranch::forward(const Tensor& y) const {
    const int rows = y.extent(0), cols = y.extent(1);
    require_shape(rows >= 16 && cols >= 16,
                  "spatial branch: image must be at least 16x16 for four halvings");
    Tensor t = tokenizer.forward(y);
    t = stage1_b.forward(stage1_a.forward(t));
    t = stage2.forward(down1.forward(t));
    t = stage3_b.forward(stage3_a.forward(down2.forward(t)));
    t = final_norm.forward(stage4.forward(down3.forward(t)));
    // upsample by average pooling to a fixed coarse grid, then interpolate
    t = adaptive_avg_pool2d(t, 4, 4);
    t = bilinear_resize(t, rows, cols);
    return head.forward(t);
}

void SpatialBranch::collect(const std::string& prefix, ParamList& out_params) {
    tokenizer.collect(prefix + ".tokenizer", out_params);
    stage1_a.collect(prefix + ".stage1a", out_params);
    stage1_b.collect(prefix + ".stage1b", out_params);
    down1.collect(prefix + ".down1", out_params);
    stage2.collect(prefix + ".stage2", out_params);
    down2.collect(prefix + ".down2", out_params);
    stage3_a.collect(prefix + ".stage3a", out_params);
    stage3_b.collect(prefix + ".stage3b", out_params);
    down3.collect(prefix + ".down3", out_params);
    stage4.collect(prefix + ".stage4", out_params);
    final_norm.collect(prefix + ".final_norm", out_params);
    head.collect(prefix + ".head", out_params);
}

SpectralBranch::SpectralBranch(int bands, int endmembers, const EncoderConfig& cfg, Rng& rng) {
    const int sc = cfg.spectral_channels;
    const int n = cfg.resolved_spectral_stages(bands);
    stem = Conv3dLayer(3, 1, sc, rng);
    stem_ca = ChannelAttentionLayer(sc, cfg.ca_reduction, rng);
    stages.clear();
    int depth = bands;
    for (int i = 0; i < n; ++i) {
        stages.push_back(Stage{Conv3dLayer(3, sc, sc, rng),
                               ChannelAttentionLayer(sc, cfg.ca_reduction, rng)});
        depth /= 2;
    }
    require_value(depth >= 1, "spectral branch: too many stages for L");
    out_conv = Conv2dLayer(3, 3, depth * sc, endmembers, 1, true, rng);
}

Tensor SpectralBranch::forward(const Tensor& y) const {
    const int rows = y.extent(0), cols = y.extent(1), bands = y.extent(2);
    // depth-major volume with one feature channel: (L,H,W,1)
    Tensor vol = reshape(permute(y, {2, 0, 1}), {bands, rows, cols, 1});
    vol = stem_ca.forward(leaky_relu(stem.forward(vol)));
    for (const auto& stage : stages) {
        vol = stage.ca.forward(maxpool3d(leaky_relu(stage.conv.forward(vol)), 2));
    }
    const int depth = vol.extent(0), sc = vol.extent(3);
    Tensor flat = reshape(permute(vol, {1, 2, 0, 3}), {rows, cols, depth * sc});
    return out_conv.forward(flat);
}

void SpectralBranch::collect(const std::string& prefix, ParamList& out_params) {
    stem.collect(prefix + ".stem", out_params);
    stem_ca.collect(prefix + ".stem_ca", out_params);
    for (std::size_t i = 0; i < stages.size(); ++i) {
        const std::string sp = prefix + ".stage" + std::to_string(i);
        stages[i].conv.collect(sp + ".conv", out_params);
        stages[i].ca.collect(sp + ".ca", out_params);
    }
    out_conv.collect(prefix + ".out", out_params);
}

FusionHead::FusionHead(int endmembers, const EncoderConfig& cfg, Rng& rng)
    : ca(2 * endmembers, std::min(cfg.ca_reduction, 2 * endmembers), rng),
      conv(3, 3, 2 * endmembers, endmembers, 1, true, rng),
      gamma(cfg.gamma) {}

Tensor FusionHead::forward(const Tensor& f_spatial, const Tensor& f_spectral) const {
    require_shape(f_spatial.shape() == f_spectral.shape(),
                  "fusion: branch outputs must have identical extents");
    Tensor fused = concat_last({f_spatial, f_spectral});
    fused = add(fused, ca.forward(fused));
    return scaled_softmax(conv.forward(fused), gamma);
}

void FusionHead::collect(const std::string& prefix, ParamList& out_params) {
    ca.collect(prefix + ".ca", out_params);
    conv.collect(prefix + ".conv", out_params);
}

Encoder::Encoder(int bands, int endmembers_, const EncoderConfig& cfg_, Rng& rng)
    : cfg(cfg_), endmembers(endmembers_) {
    cfg.validate(bands);
    spatial = SpatialBranch(bands, endmembers, cfg, rng);
    spectral = SpectralBranch(bands, endmembers, cfg, rng);
    fusion = FusionHead(endmembers, cfg, rng);
}

Tensor Encoder::forward(const Tensor& y, Ablation ablation) const {
    const Shape branch_shape{y.extent(0), y.extent(1), endmembers};
    Tensor f_spatial = ablation == Ablation::spectral_only ? Tensor::zeros(branch_shape)
                                                           : spatial.forward(y);
    Tensor f_spectral = ablation == Ablation::spatial_only ? Tensor::zeros(branch_shape)
                                                           : spectral.forward(y);
    return fusion.forward(f_spatial, f_spectral);
}

void Encoder::collect(const std::string& prefix, ParamList& out_params) {
    spatial.collect(prefix + ".spatial", out_params);
    spectral.collect(prefix + ".spectral", out_params);
    fusion.collect(prefix + ".fusion", out_params);
}

}  // namespace unmix
