#pragma once

#include <string>
#include <vector>

#include "unmix/ops.hpp"
#include "unmix/rng.hpp"
#include "unmix/tensor.hpp"

namespace unmix {

struct Param {
    std::string name;
    Tensor value;
};
using ParamList = std::vector<Param>;

// U(-1/sqrt(fan_in), 1/sqrt(fan_in)), drawn in a fixed order from rng.
Tensor uniform_fan_in(Shape shape, int fan_in, Rng& rng, bool requires_grad = true);
Tensor zeros_param(Shape shape);

struct LinearLayer {
    Tensor weight;  // (din, dout)
    Tensor bias;    // (dout), undefined when bias-less

    LinearLayer() = default;
    LinearLayer(int din, int dout, Rng& rng, bool with_bias = true);
    static LinearLayer zero_init(int din, int dout, bool with_bias = true);

    Tensor forward(const Tensor& x) const { return linear(x, weight, bias); }
    void collect(const std::string& prefix, ParamList& out);
};

struct Conv2dLayer {
    Tensor kernel;  // (kh, kw, cin, cout)
    Tensor bias;    // (cout)
    int stride = 1;
    bool pad = true;

    Conv2dLayer() = default;
    Conv2dLayer(int kh, int kw, int cin, int cout, int stride, bool pad, Rng& rng);

    Tensor forward(const Tensor& x) const {
        return add_bias_last(conv2d(x, kernel, stride, stride, pad), bias);
    }
    void collect(const std::string& prefix, ParamList& out);
};

// 3-D conv with a depth-only kernel (kd,1,1,cin,cout), stride 1, zero pad.
struct Conv3dLayer {
    Tensor kernel;
    Tensor bias;

    Conv3dLayer() = default;
    Conv3dLayer(int kd, int cin, int cout, Rng& rng);

    Tensor forward(const Tensor& x) const {
        return add_bias_last(conv3d(x, kernel, /*zero_pad=*/true), bias);
    }
    void collect(const std::string& prefix, ParamList& out);
};

struct LayerNormLayer {
    Tensor gain;  // init 1
    Tensor bias;  // init 0

    LayerNormLayer() = default;
    explicit LayerNormLayer(int channels);

    Tensor forward(const Tensor& x) const { return layer_norm(x, gain, bias); }
    void collect(const std::string& prefix, ParamList& out);
};

// CBAM channel attention: shared two-layer MLP over global average- and
// max-pooled descriptors, sigmoid gate broadcast over all leading axes.
struct ChannelAttentionLayer {
    LinearLayer fc1;  // C -> C/reduction
    LinearLayer fc2;  // C/reduction -> C

    ChannelAttentionLayer() = default;
    ChannelAttentionLayer(int channels, int reduction, Rng& rng);

    Tensor weights(const Tensor& x) const;  // (C) gate in (0,1)
    Tensor forward(const Tensor& x) const { return scale_channels(x, weights(x)); }
    void collect(const std::string& prefix, ParamList& out);
};

}  // namespace unmix
