#pragma once

#include <vector>

#include "tomonet/tensor.hpp"

namespace tomonet {

// Square odd-sized 2D convolution kernel with per-output-channel bias.
// Weight layout: ((j * size + i) * in_depth + c) * out_depth + o, where i
// offsets x and j offsets y.
struct ConvKernel {
  int size = 3;
  int in_depth = 1;
  int out_depth = 1;
  int dilation = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  ConvKernel() = default;
  ConvKernel(int size, int in_depth, int out_depth, int dilation);

  size_t weight_index(int i, int j, int c, int o) const {
    return ((static_cast<size_t>(j) * size + i) * in_depth + c) * out_depth +
           o;
  }

  void validate() const;
};

struct ConvGrads {
  Tensor3 input;
  std::vector<double> weights;
  std::vector<double> bias;
};

// Dilated convolution with zero same-padding (pad = dilation * (size-1)/2),
// so output spatial dims equal the input's and output depth is
// kernel.out_depth.
Tensor3 conv2d(const Tensor3& input, const ConvKernel& kernel);

// Exact reverse-mode gradients of conv2d with respect to input, weights and
// bias, given the upstream cotangent.
ConvGrads conv2d_grad(const Tensor3& input, const ConvKernel& kernel,
                      const Tensor3& upstream);

// Element-wise max(0, v) and its gradient; the gradient passes upstream
// where input > 0.
Tensor3 relu(const Tensor3& input);
Tensor3 relu_grad(const Tensor3& input, const Tensor3& upstream);

// Element-wise sum of identically shaped tensors.
Tensor3 add(const Tensor3& a, const Tensor3& b);

}  // namespace tomonet
