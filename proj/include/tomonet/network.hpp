#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tomonet/conv.hpp"
#include "tomonet/tensor.hpp"

namespace tomonet {

enum class Activation { Rectifier, None };

Activation activation_from_string(const std::string& s);
std::string to_string(Activation a);

// Declarative description of the multi-scale network: a lift convolution,
// n_scales periodic-shuffling downscale stages with residual blocks, the
// mirrored upscale path joined to the downscale features by element-wise
// sums, and a linear output convolution. Channel count grows by r^2 per
// downscale so the total feature volume H*W*D stays constant on the trunk.
struct NetworkSpec {
  int base_channels = 8;
  int r = 2;
  int n_scales = 2;
  int blocks_per_scale = 2;
  int dilation = 2;
  Activation activation = Activation::Rectifier;

  void validate() const;
  int scale_divisor() const;  // r^n_scales

  bool operator==(const NetworkSpec&) const = default;
};

// One step of the fixed computation sequence. Nodes reference earlier nodes
// by index; node 0 is the input image.
struct PlanNode {
  enum class Op { Input, Conv, Relu, PsDown, PsUp, Add };
  Op op = Op::Input;
  int arg = -1;       // producing node
  int arg2 = -1;      // second operand for Add
  int kernel = -1;    // index into LayerPlan::kernels for Conv
  bool operator==(const PlanNode&) const = default;
};

// Shape of one learnable convolution layer.
struct KernelShape {
  std::string name;
  int size = 3;
  int in_depth = 1;
  int out_depth = 1;
  int dilation = 1;
  bool operator==(const KernelShape&) const = default;
};

struct LayerPlan {
  NetworkSpec spec;
  std::vector<PlanNode> nodes;
  std::vector<KernelShape> kernels;
  int trunk_begin = 0;  // node holding the lift output
  int trunk_end = 0;    // last trunk node before the output convolution

  bool operator==(const LayerPlan&) const = default;
};

// Learned weights, one ConvKernel per LayerPlan kernel, plus the global
// input normalization constant recorded at training time.
struct Parameters {
  std::vector<ConvKernel> kernels;
  double input_scale = 1.0;
};

struct ParamGrads {
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<double>> bias;
  Tensor3 input;
};

LayerPlan build(const NetworkSpec& spec);

// He-style initialization: weights from N(0, 2 / (size^2 * in_depth)),
// biases zero. Deterministic per seed.
Parameters init_he(const LayerPlan& plan, uint64_t seed);
Parameters zero_parameters(const LayerPlan& plan);

// Per-node output shapes for a given input, without running the network.
struct NodeShape {
  int height = 0, width = 0, depth = 0;
  size_t volume() const {
    return static_cast<size_t>(height) * width * depth;
  }
};
std::vector<NodeShape> infer_shapes(const LayerPlan& plan, int height,
                                    int width);

// Runs the plan; input must be depth 1 with spatial dims divisible by
// r^n_scales. Output has the input's shape. forward_cached returns every
// node's activation for the backward pass.
Tensor3 forward(const LayerPlan& plan, const Parameters& params,
                const Tensor3& input);
std::vector<Tensor3> forward_cached(const LayerPlan& plan,
                                    const Parameters& params,
                                    const Tensor3& input);

// Reverse-mode sweep over the cached activations. upstream is the cotangent
// of the network output.
ParamGrads backward(const LayerPlan& plan, const Parameters& params,
                    const std::vector<Tensor3>& cache,
                    const Tensor3& upstream);

// Single-precision inference path: weights converted once, activations in
// flat float buffers. Inference-only optimization; training and gradient
// checks stay in double.
struct Float32Model {
  LayerPlan plan;
  double input_scale = 1.0;
  std::vector<std::vector<float>> weights;
  std::vector<std::vector<float>> bias;
};
Float32Model compile_f32(const LayerPlan& plan, const Parameters& params);
Tensor3 forward_f32(const Float32Model& model, const Tensor3& input);

// Theoretical receptive field (extent in input pixels) of one output unit,
// accounting for dilation and the coordinate scaling of the shuffle stages.
int receptive_field(const NetworkSpec& spec);

// Receptive field of a plain chain of 3x3 convolutions with the given
// dilations: 1 + sum(2 * d).
int conv_chain_receptive_field(const std::vector<int>& dilations);

// Binary parameter container: magic "MSFCNN1", a length-prefixed JSON header
// (spec echo, layer shapes, offsets, input_scale), then little-endian 64-bit
// floats, weights then bias per layer in plan order.
void save_parameters(const std::string& path, const LayerPlan& plan,
                     const Parameters& params);
struct LoadedModel {
  NetworkSpec spec;
  LayerPlan plan;
  Parameters params;
};
LoadedModel load_parameters(const std::string& path);

}  // namespace tomonet
