#include "unmix/nn.hpp"

#include <cmath>

namespace unmix {

Tensor uniform_fan_in(Shape shape, int fan_in, Rng& rng, bool requires_grad) {
    const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in));
    const std::int64_t n = shape_numel(shape);
    std::vector<float> v(static_cast<std::size_t>(n));
    for (auto& x : v) x = rng.uniform(-bound, bound);
    return Tensor::from_data(std::move(shape), std::move(v), requires_grad);
}

Tensor zeros_param(Shape shape) {
    return Tensor::zeros(std::move(shape), /*requires_grad=*/true);
}

LinearLayer::LinearLayer(int din, int dout, Rng& rng, bool with_bias) {
    weight = uniform_fan_in({din, dout}, din, rng);
    if (with_bias) bias = uniform_fan_in({dout}, din, rng);
}

LinearLayer LinearLayer::zero_init(int din, int dout, bool with_bias) {
    LinearLayer l;
    l.weight = zeros_param({din, dout});
    if (with_bias) l.bias = zeros_param({dout});
    return l;
}

void LinearLayer::collect(const std::string& prefix, ParamList& out) {
    out.push_back({prefix + ".weight", weight});
    if (bias.defined()) out.push_back({prefix + ".bias", bias});
}

Conv2dLayer::Conv2dLayer(int kh, int kw, int cin, int cout, int stride_, bool pad_, Rng& rng)
    : stride(stride_), pad(pad_) {
    const int fan_in = kh * kw * cin;
    kernel = uniform_fan_in({kh, kw, cin, cout}, fan_in, rng);
    bias = uniform_fan_in({cout}, fan_in, rng);
}

void Conv2dLayer::collect(const std::string& prefix, ParamList& out) {
    out.push_back({prefix + ".kernel", kernel});
    out.push_back({prefix + ".bias", bias});
}

Conv3dLayer::Conv3dLayer(int kd, int cin, int cout, Rng& rng) {
    const int fan_in = kd * cin;
    kernel = uniform_fan_in({kd, 1, 1, cin, cout}, fan_in, rng);
    bias = uniform_fan_in({cout}, fan_in, rng);
}

void Conv3dLayer::collect(const std::string& prefix, ParamList& out) {
    out.push_back({prefix + ".kernel", kernel});
    out.push_back({prefix + ".bias", bias});
}

LayerNormLayer::LayerNormLayer(int channels) {
    gain = Tensor::from_data({channels}, std::vector<float>(static_cast<std::size_t>(channels), 1.0f),
                             /*requires_grad=*/true);
    bias = zeros_param({channels});
}

void LayerNormLayer::collect(const std::string& prefix, ParamList& out) {
    out.push_back({prefix + ".gain", gain});
    out.push_back({prefix + ".bias", bias});
}

ChannelAttentionLayer::ChannelAttentionLayer(int channels, int reduction, Rng& rng) {
    require_value(reduction >= 1, "channel attention: reduction must be >= 1");
    require_value(channels >= reduction, "channel attention: C must be >= reduction");
    const int hidden = channels / reduction;
    fc1 = LinearLayer(channels, hidden, rng);
    fc2 = LinearLayer(hidden, channels, rng);
}

Tensor ChannelAttentionLayer::weights(const Tensor& x) const {
    Tensor avg = fc2.forward(relu(fc1.forward(global_avg_pool(x))));
    Tensor mx = fc2.forward(relu(fc1.forward(global_max_pool(x))));
    return sigmoid(add(avg, mx));
}

void ChannelAttentionLayer::collect(const std::string& prefix, ParamList& out) {
    fc1.collect(prefix + ".fc1", out);
    fc2.collect(prefix + ".fc2", out);
}

}  // namespace unmix
