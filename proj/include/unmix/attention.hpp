#pragma once

#include <vector>

#include "unmix/nn.hpp"

namespace unmix {

struct AttentionConfig {
    int heads = 3;                    // m
    int head_dim = 0;                 // d, model channels = m*d
    int window = 3;                   // odd side length
    std::vector<int> dilation_rates;  // one rate per head

    // Rates cycle through 1,2,3 across heads (3 heads -> [1,2,3],
    // 6 heads -> [1,1,2,2,3,3], ...).
    static AttentionConfig multi_scale(int heads, int head_dim, int window = 3);

    int channels() const { return heads * head_dim; }
    void validate() const;
};

// Shared projection structure of MSDA and MHSA: qkv projection, per-head
// attention, concat, output projection. Sliding mode applies swda with each
// head's dilation rate; dense mode applies full self-attention per head.
struct AttentionCore {
    enum class Mode { sliding, dense };

    Mode mode = Mode::sliding;
    AttentionConfig cfg;
    LinearLayer qkv;  // C -> 3C
    LinearLayer out;  // C -> C

    AttentionCore() = default;
    AttentionCore(Mode mode, const AttentionConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& x) const;  // (H,W,C) -> (H,W,C)
    void collect(const std::string& prefix, ParamList& out_params);
};

// Conditional position embedding: x + depthwise 3x3 conv (zero padded).
Tensor cpe(const Tensor& x, const Tensor& dw_kernel);

// Pre-norm transformer block:
//   x1 = x + attn(norm1(cpe(x)))
//   x2 = x1 + mlp2(gelu(mlp1(norm2(x1))))
struct TransformerBlock {
    Tensor cpe_kernel;  // (3,3,C) depthwise
    LayerNormLayer norm1, norm2;
    AttentionCore attn;
    LinearLayer mlp1, mlp2;  // C -> 4C -> C

    TransformerBlock() = default;
    TransformerBlock(AttentionCore::Mode mode, const AttentionConfig& cfg, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParamList& out_params);
};

// Patch embedding: two 3x3 stride-1 zero-padded convs with GELU between,
// mapping L input bands to C channels at unchanged spatial extents.
struct OverlappingTokenizer {
    Conv2dLayer conv1, conv2;

    OverlappingTokenizer() = default;
    OverlappingTokenizer(int in_channels, int embed_channels, Rng& rng);

    Tensor forward(const Tensor& y) const;
    void collect(const std::string& prefix, ParamList& out_params);
};

// 3x3 stride-2 zero-padded conv: (H,W,C) -> (ceil(H/2), ceil(W/2), 2C).
struct DownsampleLayer {
    Conv2dLayer conv;

    DownsampleLayer() = default;
    DownsampleLayer(int in_channels, Rng& rng);

    Tensor forward(const Tensor& x) const;
    void collect(const std::string& prefix, ParamList& out_params);
};

}  // namespace unmix
