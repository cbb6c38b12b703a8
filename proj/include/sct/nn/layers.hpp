#pragma once

#include <utility>

#include "sct/nn/tensor.hpp"

namespace sct::nn {

// Stateless layer kernels. Each forward has a matching backward that maps the upstream
// gradient dy to gradients of its inputs and weights.

/// Cubic 3D convolution. x [N, Cin, D, H, W], weight [Cout, Cin, k, k, k], bias [Cout].
/// Output extent per axis is (in + 2 pad - k) / stride + 1.
Tensor conv3d_forward(const Tensor& x, const Tensor& weight, const Tensor& bias, int stride, int pad);

struct Conv3dGrads {
    Tensor dx;
    Tensor dweight;
    Tensor dbias;
};

/// dx is left empty when need_dx is false (first layer).
Conv3dGrads conv3d_backward(const Tensor& x, const Tensor& weight, int stride, int pad, const Tensor& dy,
                            bool need_dx = true);

Tensor relu_forward(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& dy);

Tensor sigmoid_forward(const Tensor& x);
/// Uses the forward output y: dx = dy * y * (1 - y).
Tensor sigmoid_backward(const Tensor& y, const Tensor& dy);

/// Nearest-neighbour x2 upsampling of [N, C, D, H, W].
Tensor upsample2_forward(const Tensor& x);
Tensor upsample2_backward(const Tensor& dy);

/// Channel concatenation of two [N, *, D, H, W] tensors, and the inverse split of a gradient.
Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels(const Tensor& dy, int channels_a);

/// [N, C, D, H, W] <-> [N, T = D*H*W, C]; tokens follow the voxel raster order.
Tensor to_tokens(const Tensor& x);
Tensor from_tokens(const Tensor& tokens, int d, int h, int w);

/// y = x W^T + b over the last axis. x [..., in], weight [out, in], bias [out].
Tensor linear_forward(const Tensor& x, const Tensor& weight, const Tensor& bias);

struct LinearGrads {
    Tensor dx;
    Tensor dweight;
    Tensor dbias;
};

LinearGrads linear_backward(const Tensor& x, const Tensor& weight, const Tensor& dy);

}  // namespace sct::nn
