#pragma once

#include <vector>

#include "unmix/tensor.hpp"

// Differentiable tensor operations. Forward executes eagerly; when a Tape is
// active and an input is tracked, the op records one backward closure. All
// reductions run in fixed row-major order so results are bit-reproducible.
namespace unmix {

enum class Activation { relu, leaky_relu, gelu, hardtanh, sigmoid };

// --- elementwise ---------------------------------------------------------
Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, float c);

// Elementwise product. b may instead have a trailing extent of 1 with equal
// leading extents, in which case it broadcasts along the last axis.
Tensor hadamard(const Tensor& a, const Tensor& b);

// field (r,c,1) * x (r,c,L): the single-channel field scales every band.
Tensor broadcast_field_mul(const Tensor& field, const Tensor& x);

Tensor activation(Activation kind, const Tensor& x, float lo = -1.0f, float hi = 1.0f);
Tensor relu(const Tensor& x);
Tensor leaky_relu(const Tensor& x);  // slope 0.01
Tensor gelu(const Tensor& x);        // tanh approximation, constant 0.044715
Tensor hardtanh(const Tensor& x, float lo, float hi);
Tensor sigmoid(const Tensor& x);

// Per-position softmax over the last axis of gamma*x (max-subtracted).
Tensor scaled_softmax(const Tensor& x, float gamma);

// Layer norm over the last axis with learnable gain/bias.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps = 1e-5f);

// --- linear algebra ------------------------------------------------------
// x (..., Din) @ w (Din, Dout) -> (..., Dout)
Tensor matmul_last(const Tensor& x, const Tensor& w);
// Affine map over the last axis; bias may be undefined.
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& bias);
// a (rows, cols, R) x3 m (R, L) -> (rows, cols, L)
Tensor mode3_product(const Tensor& a, const Tensor& m);
Tensor add_bias_last(const Tensor& x, const Tensor& bias);

// --- convolution / pooling ----------------------------------------------
// x (H,W,Cin), kernel (kh,kw,Cin,Cout). zero_pad pads by (k-1)/2 per side.
Tensor conv2d(const Tensor& x, const Tensor& kernel, int stride_h, int stride_w, bool zero_pad);
// x (H,W,C), kernel (kh,kw,C): one 2-D filter per channel, stride 1, zero pad.
Tensor depthwise_conv2d(const Tensor& x, const Tensor& kernel);
// x (D,H,W,Cin), kernel (kd,1,1,Cin,Cout): correlation along depth only,
// stride 1; zero_pad keeps the depth extent unchanged.
Tensor conv3d(const Tensor& x, const Tensor& kernel, bool zero_pad);
// Window (w,1,1) with stride w along depth; grad routes to the first argmax.
Tensor maxpool3d(const Tensor& x, int window_d);
Tensor adaptive_avg_pool2d(const Tensor& x, int out_h, int out_w);
Tensor bilinear_resize(const Tensor& x, int out_h, int out_w);

// --- shape ----------------------------------------------------------------
Tensor permute(const Tensor& x, const std::vector<int>& perm);
Tensor reshape(const Tensor& x, Shape shape);
Tensor slice_last(const Tensor& x, int start, int len);
Tensor concat_last(const std::vector<Tensor>& parts);

// --- reductions -----------------------------------------------------------
Tensor sum(const Tensor& x);        // -> (1), double accumulator
Tensor mean_last(const Tensor& x);  // (..., C) -> (..., 1)
Tensor global_avg_pool(const Tensor& x);  // (..., C) -> (C)
Tensor global_max_pool(const Tensor& x);  // (..., C) -> (C)
// x (..., C) * w (C), broadcast over leading axes.
Tensor scale_channels(const Tensor& x, const Tensor& w);

// --- attention -------------------------------------------------------------
// Sliding-window dilated attention. q,k,v (H,W,d): each query attends to the
// positions (i + p*rate, j + q*rate), |p|,|q| <= (window-1)/2, with
// out-of-bounds positions masked out of the softmax. window must be odd.
Tensor swda(const Tensor& q, const Tensor& k, const Tensor& v, int rate, int window);
// Dense softmax attention over all H*W positions.
Tensor dense_attention(const Tensor& q, const Tensor& k, const Tensor& v);

// --- spectral losses --------------------------------------------------------
// Mean over pixels of arccos(<y,yhat>/(|y||yhat|)); cos clamped to [-1,1].
Tensor spectral_angle_mean(const Tensor& y, const Tensor& y_hat);

}  // namespace unmix
