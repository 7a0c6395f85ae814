#include "tomonet/conv.hpp"

#include <algorithm>

#include "tomonet/threads.hpp"

namespace tomonet {

ConvKernel::ConvKernel(int size, int in_depth, int out_depth, int dilation)
    : size(size),
      in_depth(in_depth),
      out_depth(out_depth),
      dilation(dilation),
      weights(static_cast<size_t>(size) * size * in_depth * out_depth, 0.0),
      bias(out_depth, 0.0) {
  validate();
}

void ConvKernel::validate() const {
  if (size < 1 || size % 2 == 0)
    throw contract_error("ConvKernel: size must be odd and positive");
  if (in_depth < 1 || out_depth < 1)
    throw contract_error("ConvKernel: depths must be positive");
  if (dilation != 1 && dilation != 2)
    throw contract_error("ConvKernel: dilation must be 1 or 2");
  if (weights.size() !=
      static_cast<size_t>(size) * size * in_depth * out_depth)
    throw contract_error("ConvKernel: weight count does not match shape");
  if (bias.size() != static_cast<size_t>(out_depth))
    throw contract_error("ConvKernel: bias count does not match out_depth");
}

Tensor3 conv2d(const Tensor3& input, const ConvKernel& kernel) {
  kernel.validate();
  if (input.depth() != kernel.in_depth)
    throw contract_error("conv2d: input depth does not match kernel in_depth");

  const int h = input.height(), w = input.width();
  const int cin = kernel.in_depth, cout = kernel.out_depth;
  const int k = kernel.size, ctr = kernel.size / 2, dil = kernel.dilation;
  Tensor3 out(h, w, cout);
  const double* in = input.data().data();
  const double* wts = kernel.weights.data();
  double* dst = out.data().data();

  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double* px = dst + (static_cast<size_t>(y) * w + x) * cout;
      for (int o = 0; o < cout; ++o) px[o] = kernel.bias[o];
      for (int j = 0; j < k; ++j) {
        int yy = y + (j - ctr) * dil;
        if (yy < 0 || yy >= h) continue;
        for (int i = 0; i < k; ++i) {
          int xx = x + (i - ctr) * dil;
          if (xx < 0 || xx >= w) continue;
          const double* src = in + (static_cast<size_t>(yy) * w + xx) * cin;
          const double* wrow =
              wts + (static_cast<size_t>(j) * k + i) * cin * cout;
          for (int c = 0; c < cin; ++c) {
            double v = src[c];
            const double* wc = wrow + static_cast<size_t>(c) * cout;
            for (int o = 0; o < cout; ++o) px[o] += v * wc[o];
          }
        }
      }
    }
  });
  if (!out.all_finite()) throw numeric_error("conv2d: non-finite output");
  return out;
}

ConvGrads conv2d_grad(const Tensor3& input, const ConvKernel& kernel,
                      const Tensor3& upstream) {
  kernel.validate();
  if (input.depth() != kernel.in_depth)
    throw contract_error("conv2d_grad: input depth mismatch");
  if (upstream.height() != input.height() ||
      upstream.width() != input.width() ||
      upstream.depth() != kernel.out_depth)
    throw contract_error("conv2d_grad: upstream shape mismatch");

  const int h = input.height(), w = input.width();
  const int cin = kernel.in_depth, cout = kernel.out_depth;
  const int k = kernel.size, ctr = kernel.size / 2, dil = kernel.dilation;
  const double* in = input.data().data();
  const double* up = upstream.data().data();
  const double* wts = kernel.weights.data();

  ConvGrads g;
  g.input = zeros_like(input);
  g.weights.assign(kernel.weights.size(), 0.0);
  g.bias.assign(kernel.bias.size(), 0.0);
  double* gin = g.input.data().data();

  // grad_input as a gather over upstream: contributions from output (xs, ys)
  // whose kernel tap (i, j) lands on this input pixel.
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      double* px = gin + (static_cast<size_t>(y) * w + x) * cin;
      for (int j = 0; j < k; ++j) {
        int ys = y - (j - ctr) * dil;
        if (ys < 0 || ys >= h) continue;
        for (int i = 0; i < k; ++i) {
          int xs = x - (i - ctr) * dil;
          if (xs < 0 || xs >= w) continue;
          const double* urow = up + (static_cast<size_t>(ys) * w + xs) * cout;
          const double* wrow =
              wts + (static_cast<size_t>(j) * k + i) * cin * cout;
          for (int c = 0; c < cin; ++c) {
            const double* wc = wrow + static_cast<size_t>(c) * cout;
            double acc = 0.0;
            for (int o = 0; o < cout; ++o) acc += urow[o] * wc[o];
            px[c] += acc;
          }
        }
      }
    }
  });

  // grad_weights and grad_bias. Sequential over pixels: accumulators are
  // shared across the whole image.
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double* urow = up + (static_cast<size_t>(y) * w + x) * cout;
      for (int o = 0; o < cout; ++o) g.bias[o] += urow[o];
      for (int j = 0; j < k; ++j) {
        int yy = y + (j - ctr) * dil;
        if (yy < 0 || yy >= h) continue;
        for (int i = 0; i < k; ++i) {
          int xx = x + (i - ctr) * dil;
          if (xx < 0 || xx >= w) continue;
          const double* src = in + (static_cast<size_t>(yy) * w + xx) * cin;
          double* gw = g.weights.data() +
                       (static_cast<size_t>(j) * k + i) * cin * cout;
          for (int c = 0; c < cin; ++c) {
            double v = src[c];
            double* gc = gw + static_cast<size_t>(c) * cout;
            for (int o = 0; o < cout; ++o) gc[o] += v * urow[o];
          }
        }
      }
    }
  }

  if (!g.input.all_finite())
    throw numeric_error("conv2d_grad: non-finite gradient");
  return g;
}

Tensor3 relu(const Tensor3& input) {
  Tensor3 out = input;
  for (double& v : out.data()) v = std::max(0.0, v);
  return out;
}

Tensor3 relu_grad(const Tensor3& input, const Tensor3& upstream) {
  require_same_shape(input, upstream, "relu_grad");
  Tensor3 out = zeros_like(input);
  const auto& in = input.data();
  const auto& up = upstream.data();
  auto& dst = out.data();
  for (size_t i = 0; i < dst.size(); ++i) dst[i] = in[i] > 0.0 ? up[i] : 0.0;
  return out;
}

Tensor3 add(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "add");
  Tensor3 out = a;
  const auto& src = b.data();
  auto& dst = out.data();
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
  return out;
}

}  // namespace tomonet
