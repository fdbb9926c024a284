#include "unmix/decoder.hpp"

#include <algorithm>

#include "unmix/ops.hpp"

namespace unmix {

Decoder::Decoder(int endmembers_, int bands_, Rng& rng)
    : endmembers(endmembers_), bands(bands_) {
    require_value(endmembers >= 1 && bands >= 1, "decoder: bad extents");
    require_value(3 * bands >= 4, "decoder: 3L must survive two halvings");
    endmember_weights = zeros_param({endmembers, bands});
    head_stem = Conv3dLayer(5, 1, kHeadWidth, rng);
    head_conv1 = Conv3dLayer(5, kHeadWidth, kHeadWidth, rng);
    head_conv2 = Conv3dLayer(5, kHeadWidth, kHeadWidth, rng);
    // zero-initialised final map: training starts at the LMM (B = 0)
    head_mean_weight = zeros_param({1, 1});
    head_linear = LinearLayer::zero_init(residual_depth() * kHeadWidth, 1);
}

int Decoder::residual_depth() const { return (3 * bands / 2) / 2; }

Tensor Decoder::linear_mixing(const Tensor& abundance) const {
    require_shape(abundance.rank() == 3 && abundance.extent(2) == endmembers,
                  "linear_mixing: abundance channels must equal R");
    return mode3_product(abundance, relu(endmember_weights));
}

Tensor Decoder::nonlinear_head(const Tensor& y, const Tensor& y_linear) const {
    require_shape(y.shape() == y_linear.shape(), "nonlinear_head: Y and Y_lin shapes differ");
    const int rows = y.extent(0), cols = y.extent(1);
    Tensor feat = concat_last({y, y_linear, hadamard(y_linear, y_linear)});  // (H,W,3L)
    Tensor vol = reshape(permute(feat, {2, 0, 1}), {3 * bands, rows, cols, 1});
    vol = head_stem.forward(vol);
    vol = maxpool3d(hardtanh(head_conv1.forward(vol), -1.0f, 1.0f), 2);
    vol = maxpool3d(hardtanh(head_conv2.forward(vol), -1.0f, 1.0f), 2);
    const int depth = vol.extent(0);
    Tensor per_pixel = reshape(permute(vol, {1, 2, 0, 3}), {rows, cols, depth * kHeadWidth});
    Tensor b_mean = matmul_last(mean_last(per_pixel), head_mean_weight);
    Tensor b_lin = head_linear.forward(per_pixel);
    return add(b_mean, b_lin);
}

Tensor Decoder::reconstruct(const Tensor& y_linear, const Tensor& b_field) {
    return add(y_linear, broadcast_field_mul(b_field, hadamard(y_linear, y_linear)));
}

Decoder::Outputs Decoder::forward(const Tensor& y, const Tensor& abundance) const {
    Outputs out;
    out.y_linear = linear_mixing(abundance);
    out.b_field = nonlinear_head(y, out.y_linear);
    out.y_hat = reconstruct(out.y_linear, out.b_field);
    return out;
}

EndmemberMatrix Decoder::extract_endmembers() const {
    std::vector<float> clamped(endmember_weights.data(),
                               endmember_weights.data() + endmember_weights.numel());
    for (float& v : clamped) v = std::max(0.0f, v);
    EndmemberMatrix m;
    m.count = endmembers;
    m.bands = bands;
    m.values = Tensor::from_data({endmembers, bands}, std::move(clamped));
    return m;
}

void Decoder::set_endmembers(const EndmemberMatrix& m) {
    require_shape(m.count == endmembers && m.bands == bands,
                  "set_endmembers: matrix extents do not match the decoder");
    std::copy(m.values.data(), m.values.data() + m.values.numel(), endmember_weights.data());
}

void Decoder::collect(const std::string& prefix, ParamList& out_params) {
    out_params.push_back({prefix + ".endmembers", endmember_weights});
    head_stem.collect(prefix + ".head_stem", out_params);
    head_conv1.collect(prefix + ".head_conv1", out_params);
    head_conv2.collect(prefix + ".head_conv2", out_params);
    out_params.push_back({prefix + ".head_mean_weight", head_mean_weight});
    head_linear.collect(prefix + ".head_linear", out_params);
}

}  // namespace unmix
