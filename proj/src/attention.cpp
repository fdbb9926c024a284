#include "unmix/attention.hpp"

namespace unmix {

AttentionConfig AttentionConfig::multi_scale(int heads, int head_dim, int window) {
    AttentionConfig cfg;
    cfg.heads = heads;
    cfg.head_dim = head_dim;
    cfg.window = window;
    cfg.dilation_rates.resize(static_cast<std::size_t>(heads));
    // heads split evenly across scales 1,2,3
    for (int i = 0; i < heads; ++i) {
        const int scale = heads >= 3 ? (i * 3) / heads : i % 3;
        cfg.dilation_rates[static_cast<std::size_t>(i)] = scale + 1;
    }
    cfg.validate();
    return cfg;
}

void AttentionConfig::validate() const {
    require_value(heads >= 1, "attention: heads must be >= 1");
    require_value(head_dim >= 1, "attention: head_dim must be >= 1");
    require_value(window >= 1 && window % 2 == 1, "attention: window must be odd and >= 1");
    require_value(static_cast<int>(dilation_rates.size()) == heads,
                  "attention: one dilation rate per head required");
    for (int r : dilation_rates) require_value(r >= 1, "attention: dilation rates must be >= 1");
}

AttentionCore::AttentionCore(Mode mode_, const AttentionConfig& cfg_, Rng& rng)
    : mode(mode_), cfg(cfg_) {
    cfg.validate();
    const int c = cfg.channels();
    qkv = LinearLayer(c, 3 * c, rng);
    out = LinearLayer(c, c, rng);
}

Tensor AttentionCore::forward(const Tensor& x) const {
    const int c = cfg.channels();
    require_shape(x.rank() == 3 && x.extent(2) == c,
                  "attention: channels (" + std::to_string(x.extent(2)) + ") must equal heads*head_dim (" +
                      std::to_string(c) + ")");
    Tensor proj = qkv.forward(x);  // (H,W,3C)
    std::vector<Tensor> head_outputs;
    head_outputs.reserve(static_cast<std::size_t>(cfg.heads));
    for (int h = 0; h < cfg.heads; ++h) {
        const int off = h * cfg.head_dim;
        Tensor q = slice_last(proj, off, cfg.head_dim);
        Tensor k = slice_last(proj, c + off, cfg.head_dim);
        Tensor v = slice_last(proj, 2 * c + off, cfg.head_dim);
        if (mode == Mode::sliding) {
            head_outputs.push_back(
                swda(q, k, v, cfg.dilation_rates[static_cast<std::size_t>(h)], cfg.window));
        } else {
            head_outputs.push_back(dense_attention(q, k, v));
        }
    }
    return out.forward(concat_last(head_outputs));
}

void AttentionCore::collect(const std::string& prefix, ParamList& out_params) {
    qkv.collect(prefix + ".qkv", out_params);
    out.collect(prefix + ".out", out_params);
}

Tensor cpe(const Tensor& x, const Tensor& dw_kernel) {
    return add(x, depthwise_conv2d(x, dw_kernel));
}

TransformerBlock::TransformerBlock(AttentionCore::Mode mode, const AttentionConfig& cfg, Rng& rng) {
    const int c = cfg.channels();
    cpe_kernel = uniform_fan_in({3, 3, c}, 9, rng);
    norm1 = LayerNormLayer(c);
    norm2 = LayerNormLayer(c);
    attn = AttentionCore(mode, cfg, rng);
    mlp1 = LinearLayer(c, 4 * c, rng);
    mlp2 = LinearLayer(4 * c, c, rng);
}

Tensor TransformerBlock::forward(const Tensor& x) const {
    Tensor x1 = add(x, attn.forward(norm1.forward(cpe(x, cpe_kernel))));
    Tensor x2 = add(x1, mlp2.forward(gelu(mlp1.forward(norm2.forward(x1)))));
    return x2;
}

void TransformerBlock::collect(const std::string& prefix, ParamList& out_params) {
    out_params.push_back({prefix + ".cpe", cpe_kernel});
    norm1.collect(prefix + ".norm1", out_params);
    attn.collect(prefix + ".attn", out_params);
    norm2.collect(prefix + ".norm2", out_params);
    mlp1.collect(prefix + ".mlp1", out_params);
    mlp2.collect(prefix + ".mlp2", out_params);
}

OverlappingTokenizer::OverlappingTokenizer(int in_channels, int embed_channels, Rng& rng)
    : conv1(3, 3, in_channels, embed_channels, 1, true, rng),
      conv2(3, 3, embed_channels, embed_channels, 1, true, rng) {}

Tensor OverlappingTokenizer::forward(const Tensor& y) const {
    return conv2.forward(gelu(conv1.forward(y)));
}

void OverlappingTokenizer::collect(const std::string& prefix, ParamList& out_params) {
    conv1.collect(prefix + ".conv1", out_params);
    conv2.collect(prefix + ".conv2", out_params);
}

DownsampleLayer::DownsampleLayer(int in_channels, Rng& rng)
    : conv(3, 3, in_channels, 2 * in_channels, 2, true, rng) {}

Tensor DownsampleLayer::forward(const Tensor& x) const {
    require_shape(x.extent(0) >= 2 && x.extent(1) >= 2, "downsample: input smaller than 2x2");
    return conv.forward(x);
}

void DownsampleLayer::collect(const std::string& prefix, ParamList& out_params) {
    conv.collect(prefix + ".conv", out_params);
}

}  // namespace unmix
