#include "tomonet/network.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "tomonet/rng.hpp"
#include "tomonet/shuffle.hpp"
#include "tomonet/threads.hpp"

namespace tomonet {

using nlohmann::json;

Activation activation_from_string(const std::string& s) {
  if (s == "rectifier") return Activation::Rectifier;
  if (s == "none") return Activation::None;
  throw config_error("unknown activation: " + s);
}

std::string to_string(Activation a) {
  return a == Activation::Rectifier ? "rectifier" : "none";
}

void NetworkSpec::validate() const {
  if (base_channels < 1) throw config_error("spec: base_channels must be >= 1");
  if (r < 2) throw config_error("spec: shuffle rate r must be >= 2");
  if (n_scales < 0) throw config_error("spec: n_scales must be >= 0");
  if (blocks_per_scale < 1)
    throw config_error("spec: blocks_per_scale must be >= 1");
  if (dilation != 1 && dilation != 2)
    throw config_error("spec: dilation must be 1 or 2");
}

int NetworkSpec::scale_divisor() const {
  int d = 1;
  for (int s = 0; s < n_scales; ++s) d *= r;
  return d;
}

namespace {

// Assembler for the fixed node sequence.
struct PlanBuilder {
  LayerPlan plan;

  int emit(PlanNode n) {
    plan.nodes.push_back(n);
    return static_cast<int>(plan.nodes.size()) - 1;
  }

  int conv(int src, const std::string& name, int in_depth, int out_depth,
           int dilation) {
    plan.kernels.push_back({name, 3, in_depth, out_depth, dilation});
    PlanNode n;
    n.op = PlanNode::Op::Conv;
    n.arg = src;
    n.kernel = static_cast<int>(plan.kernels.size()) - 1;
    return emit(n);
  }

  int relu_maybe(int src) {
    if (plan.spec.activation == Activation::None) return src;
    PlanNode n;
    n.op = PlanNode::Op::Relu;
    n.arg = src;
    return emit(n);
  }

  int add(int a, int b) {
    PlanNode n;
    n.op = PlanNode::Op::Add;
    n.arg = a;
    n.arg2 = b;
    return emit(n);
  }

  int shuffle(int src, bool down) {
    PlanNode n;
    n.op = down ? PlanNode::Op::PsDown : PlanNode::Op::PsUp;
    n.arg = src;
    return emit(n);
  }

  // Pre-activation residual block: x + conv_b(act(conv_a(act(x)))).
  int residual_block(int src, const std::string& name, int channels) {
    int x = relu_maybe(src);
    x = conv(x, name + ".conv_a", channels, channels, plan.spec.dilation);
    x = relu_maybe(x);
    x = conv(x, name + ".conv_b", channels, channels, plan.spec.dilation);
    return add(x, src);
  }
};

}  // namespace

LayerPlan build(const NetworkSpec& spec) {
  spec.validate();
  PlanBuilder b;
  b.plan.spec = spec;
  const int C = spec.base_channels, r2 = spec.r * spec.r;

  int x = b.emit({});  // input
  x = b.conv(x, "lift", 1, C, 1);
  b.plan.trunk_begin = x;

  if (spec.n_scales == 0) {
    for (int k = 0; k < spec.blocks_per_scale; ++k)
      x = b.residual_block(x, "block" + std::to_string(k + 1), C);
  } else {
    std::vector<int> skips;
    int channels = C;
    for (int s = 1; s <= spec.n_scales; ++s) {
      skips.push_back(x);
      x = b.shuffle(x, true);
      channels *= r2;
      for (int k = 0; k < spec.blocks_per_scale; ++k)
        x = b.residual_block(x,
                             "down" + std::to_string(s) + ".block" +
                                 std::to_string(k + 1),
                             channels);
    }
    for (int s = spec.n_scales; s >= 1; --s) {
      x = b.shuffle(x, false);
      channels /= r2;
      x = b.add(x, skips.back());
      skips.pop_back();
      for (int k = 0; k < spec.blocks_per_scale; ++k)
        x = b.residual_block(x,
                             "up" + std::to_string(s) + ".block" +
                                 std::to_string(k + 1),
                             channels);
    }
  }
  b.plan.trunk_end = x;
  x = b.conv(x, "out", C, 1, 1);
  return b.plan;
}

Parameters zero_parameters(const LayerPlan& plan) {
  Parameters p;
  p.kernels.reserve(plan.kernels.size());
  for (const KernelShape& ks : plan.kernels)
    p.kernels.emplace_back(ks.size, ks.in_depth, ks.out_depth, ks.dilation);
  return p;
}

Parameters init_he(const LayerPlan& plan, uint64_t seed) {
  Parameters p = zero_parameters(plan);
  Rng rng(seed);
  for (ConvKernel& k : p.kernels) {
    double stddev = std::sqrt(2.0 / (k.size * k.size * k.in_depth));
    for (double& w : k.weights) w = stddev * rng.normal();
  }
  return p;
}

std::vector<NodeShape> infer_shapes(const LayerPlan& plan, int height,
                                    int width) {
  const int r = plan.spec.r;
  std::vector<NodeShape> shapes(plan.nodes.size());
  for (size_t i = 0; i < plan.nodes.size(); ++i) {
    const PlanNode& n = plan.nodes[i];
    switch (n.op) {
      case PlanNode::Op::Input:
        shapes[i] = {height, width, 1};
        break;
      case PlanNode::Op::Conv: {
        const NodeShape& in = shapes[n.arg];
        shapes[i] = {in.height, in.width, plan.kernels[n.kernel].out_depth};
        break;
      }
      case PlanNode::Op::Relu:
        shapes[i] = shapes[n.arg];
        break;
      case PlanNode::Op::PsDown: {
        const NodeShape& in = shapes[n.arg];
        shapes[i] = {in.height / r, in.width / r, in.depth * r * r};
        break;
      }
      case PlanNode::Op::PsUp: {
        const NodeShape& in = shapes[n.arg];
        shapes[i] = {in.height * r, in.width * r, in.depth / (r * r)};
        break;
      }
      case PlanNode::Op::Add:
        shapes[i] = shapes[n.arg];
        break;
    }
  }
  return shapes;
}

namespace {

void check_forward_input(const LayerPlan& plan, const Tensor3& input) {
  if (input.depth() != 1)
    throw contract_error("forward: input depth must be 1");
  int div = plan.spec.scale_divisor();
  if (input.height() % div != 0 || input.width() % div != 0)
    throw contract_error(
        "forward: input " + std::to_string(input.width()) + "x" +
        std::to_string(input.height()) +
        " not divisible by r^n_scales = " + std::to_string(div));
}

}  // namespace

std::vector<Tensor3> forward_cached(const LayerPlan& plan,
                                    const Parameters& params,
                                    const Tensor3& input) {
  check_forward_input(plan, input);
  if (params.kernels.size() != plan.kernels.size())
    throw contract_error("forward: parameter count does not match plan");

  std::vector<Tensor3> values(plan.nodes.size());
  for (size_t i = 0; i < plan.nodes.size(); ++i) {
    const PlanNode& n = plan.nodes[i];
    switch (n.op) {
      case PlanNode::Op::Input:
        values[i] = input;
        break;
      case PlanNode::Op::Conv:
        values[i] = conv2d(values[n.arg], params.kernels[n.kernel]);
        break;
      case PlanNode::Op::Relu:
        values[i] = relu(values[n.arg]);
        break;
      case PlanNode::Op::PsDown:
        values[i] = ps_down(values[n.arg], plan.spec.r);
        break;
      case PlanNode::Op::PsUp:
        values[i] = ps_up(values[n.arg], plan.spec.r);
        break;
      case PlanNode::Op::Add:
        values[i] = add(values[n.arg], values[n.arg2]);
        break;
    }
  }
  return values;
}

Tensor3 forward(const LayerPlan& plan, const Parameters& params,
                const Tensor3& input) {
  return forward_cached(plan, params, input).back();
}

ParamGrads backward(const LayerPlan& plan, const Parameters& params,
                    const std::vector<Tensor3>& cache,
                    const Tensor3& upstream) {
  if (cache.size() != plan.nodes.size())
    throw contract_error("backward: cache does not match plan");
  require_same_shape(cache.back(), upstream, "backward");

  ParamGrads grads;
  grads.weights.resize(plan.kernels.size());
  grads.bias.resize(plan.kernels.size());
  for (size_t k = 0; k < plan.kernels.size(); ++k) {
    grads.weights[k].assign(params.kernels[k].weights.size(), 0.0);
    grads.bias[k].assign(params.kernels[k].bias.size(), 0.0);
  }

  std::vector<Tensor3> cot(plan.nodes.size());
  std::vector<bool> has_cot(plan.nodes.size(), false);
  auto deposit = [&](int node, Tensor3&& grad) {
    if (!has_cot[node]) {
      cot[node] = std::move(grad);
      has_cot[node] = true;
    } else {
      cot[node] = add(cot[node], grad);
    }
  };
  deposit(static_cast<int>(plan.nodes.size()) - 1, Tensor3(upstream));

  for (int i = static_cast<int>(plan.nodes.size()) - 1; i >= 0; --i) {
    if (!has_cot[i]) continue;  // node feeds nothing that was reached
    const PlanNode& n = plan.nodes[i];
    const Tensor3& u = cot[i];
    switch (n.op) {
      case PlanNode::Op::Input:
        grads.input = u;
        break;
      case PlanNode::Op::Conv: {
        ConvGrads g = conv2d_grad(cache[n.arg], params.kernels[n.kernel], u);
        for (size_t w = 0; w < g.weights.size(); ++w)
          grads.weights[n.kernel][w] += g.weights[w];
        for (size_t b = 0; b < g.bias.size(); ++b)
          grads.bias[n.kernel][b] += g.bias[b];
        deposit(n.arg, std::move(g.input));
        break;
      }
      case PlanNode::Op::Relu:
        deposit(n.arg, relu_grad(cache[n.arg], u));
        break;
      case PlanNode::Op::PsDown:
        deposit(n.arg, ps_down_grad(u, plan.spec.r));
        break;
      case PlanNode::Op::PsUp:
        deposit(n.arg, ps_up_grad(u, plan.spec.r));
        break;
      case PlanNode::Op::Add: {
        deposit(n.arg, Tensor3(u));
        deposit(n.arg2, Tensor3(u));
        break;
      }
    }
    cot[i] = Tensor3();  // free as we go
  }
  return grads;
}

Float32Model compile_f32(const LayerPlan& plan, const Parameters& params) {
  if (params.kernels.size() != plan.kernels.size())
    throw contract_error("compile_f32: parameters do not match plan");
  Float32Model model;
  model.plan = plan;
  model.input_scale = params.input_scale;
  for (const ConvKernel& k : params.kernels) {
    model.weights.emplace_back(k.weights.begin(), k.weights.end());
    model.bias.emplace_back(k.bias.begin(), k.bias.end());
  }
  return model;
}

namespace {

// Register-blocked microkernel: a TILE-wide slice of output channels stays
// in registers across the whole c loop.
template <int TILE>
void conv_f32_tiled(const float* __restrict in, int h, int w, int cin,
                    const float* __restrict wts, const float* __restrict bias,
                    int cout, int dil, float* __restrict out) {
  parallel_for(0, h, [&](int y) {
    for (int x = 0; x < w; ++x) {
      float* __restrict px = out + (static_cast<size_t>(y) * w + x) * cout;
      for (int ot = 0; ot < cout; ot += TILE) {
        float acc[TILE];
        for (int t = 0; t < TILE; ++t) acc[t] = bias[ot + t];
        for (int j = 0; j < 3; ++j) {
          int yy = y + (j - 1) * dil;
          if (yy < 0 || yy >= h) continue;
          for (int i = 0; i < 3; ++i) {
            int xx = x + (i - 1) * dil;
            if (xx < 0 || xx >= w) continue;
            const float* __restrict src =
                in + (static_cast<size_t>(yy) * w + xx) * cin;
            const float* wrow =
                wts + ((static_cast<size_t>(j) * 3 + i) * cin) * cout + ot;
            for (int c = 0; c < cin; ++c) {
              float v = src[c];
              const float* __restrict wc = wrow + static_cast<size_t>(c) * cout;
              for (int t = 0; t < TILE; ++t) acc[t] += v * wc[t];
            }
          }
        }
        for (int t = 0; t < TILE; ++t) px[ot + t] = acc[t];
      }
    }
  });
}

void conv_f32(const float* in, int h, int w, int cin, const float* wts,
              const float* bias, int cout, int dil, float* out) {
  if (cout % 16 == 0)
    conv_f32_tiled<16>(in, h, w, cin, wts, bias, cout, dil, out);
  else if (cout % 8 == 0)
    conv_f32_tiled<8>(in, h, w, cin, wts, bias, cout, dil, out);
  else if (cout % 4 == 0)
    conv_f32_tiled<4>(in, h, w, cin, wts, bias, cout, dil, out);
  else
    conv_f32_tiled<1>(in, h, w, cin, wts, bias, cout, dil, out);
}

}  // namespace

Tensor3 forward_f32(const Float32Model& model, const Tensor3& input) {
  const LayerPlan& plan = model.plan;
  check_forward_input(plan, input);
  const int r = plan.spec.r;
  auto shapes = infer_shapes(plan, input.height(), input.width());

  std::vector<std::vector<float>> values(plan.nodes.size());
  for (size_t i = 0; i < plan.nodes.size(); ++i) {
    const PlanNode& n = plan.nodes[i];
    const NodeShape& s = shapes[i];
    const int h = s.height, w = s.width, d = s.depth;
    switch (n.op) {
      case PlanNode::Op::Input: {
        values[i].resize(input.size());
        const float scale = static_cast<float>(
            1.0 / (model.input_scale > 0.0 ? model.input_scale : 1.0));
        for (size_t p = 0; p < input.size(); ++p)
          values[i][p] = static_cast<float>(input.data()[p]) * scale;
        break;
      }
      case PlanNode::Op::Conv: {
        const NodeShape& si = shapes[n.arg];
        values[i].resize(s.volume());
        conv_f32(values[n.arg].data(), si.height, si.width, si.depth,
                 model.weights[n.kernel].data(), model.bias[n.kernel].data(),
                 d, plan.kernels[n.kernel].dilation, values[i].data());
        break;
      }
      case PlanNode::Op::Relu: {
        values[i] = values[n.arg];
        for (float& v : values[i]) v = v > 0.0f ? v : 0.0f;
        break;
      }
      case PlanNode::Op::PsDown: {
        const NodeShape& si = shapes[n.arg];
        values[i].resize(s.volume());
        const std::vector<float>& src = values[n.arg];
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x)
            for (int dd = 0; dd < d; ++dd) {
              int block = dd / si.depth;
              values[i][(static_cast<size_t>(y) * w + x) * d + dd] =
                  src[(static_cast<size_t>(y * r + block / r) * si.width +
                       x * r + block % r) *
                          si.depth +
                      dd % si.depth];
            }
        break;
      }
      case PlanNode::Op::PsUp: {
        const NodeShape& si = shapes[n.arg];
        values[i].resize(s.volume());
        const std::vector<float>& src = values[n.arg];
        for (int y = 0; y < h; ++y)
          for (int x = 0; x < w; ++x) {
            int base = d * ((y % r) * r + (x % r));
            for (int dd = 0; dd < d; ++dd)
              values[i][(static_cast<size_t>(y) * w + x) * d + dd] =
                  src[(static_cast<size_t>(y / r) * si.width + x / r) *
                          si.depth +
                      base + dd];
          }
        break;
      }
      case PlanNode::Op::Add: {
        values[i] = values[n.arg];
        const std::vector<float>& other = values[n.arg2];
        for (size_t p = 0; p < values[i].size(); ++p)
          values[i][p] += other[p];
        break;
      }
    }
    // free inputs no longer referenced by later nodes
  }

  const std::vector<float>& out = values.back();
  Tensor3 result(input.height(), input.width(), 1);
  for (size_t p = 0; p < out.size(); ++p) result.data()[p] = out[p];
  return result;
}

int receptive_field(const NetworkSpec& spec) {
  spec.validate();
  // Walk the trunk in forward order tracking the field extent and the jump
  // (input pixels between adjacent units at the current resolution).
  double rf = 1.0, jump = 1.0;
  auto conv3 = [&](int dilation) { rf += 2.0 * dilation * jump; };
  auto block = [&] {
    conv3(spec.dilation);
    conv3(spec.dilation);
  };

  conv3(1);  // lift
  if (spec.n_scales == 0) {
    for (int k = 0; k < spec.blocks_per_scale; ++k) block();
  } else {
    for (int s = 1; s <= spec.n_scales; ++s) {
      rf += (spec.r - 1) * jump;  // PS down gathers an r x r cell
      jump *= spec.r;
      for (int k = 0; k < spec.blocks_per_scale; ++k) block();
    }
    for (int s = spec.n_scales; s >= 1; --s) {
      jump /= spec.r;  // PS up
      for (int k = 0; k < spec.blocks_per_scale; ++k) block();
    }
  }
  conv3(1);  // output conv
  return static_cast<int>(std::lround(rf));
}

int conv_chain_receptive_field(const std::vector<int>& dilations) {
  int rf = 1;
  for (int d : dilations) rf += 2 * d;
  return rf;
}

namespace {

constexpr char kMagic[8] = {'M', 'S', 'F', 'C', 'N', 'N', '1', '\0'};

json spec_to_json(const NetworkSpec& spec) {
  return json{{"base_channels", spec.base_channels},
              {"r", spec.r},
              {"n_scales", spec.n_scales},
              {"blocks_per_scale", spec.blocks_per_scale},
              {"dilation", spec.dilation},
              {"activation", to_string(spec.activation)}};
}

NetworkSpec spec_from_json(const json& j) {
  NetworkSpec spec;
  spec.base_channels = j.at("base_channels").get<int>();
  spec.r = j.at("r").get<int>();
  spec.n_scales = j.at("n_scales").get<int>();
  spec.blocks_per_scale = j.at("blocks_per_scale").get<int>();
  spec.dilation = j.at("dilation").get<int>();
  spec.activation = activation_from_string(j.at("activation").get<std::string>());
  spec.validate();
  return spec;
}

void write_doubles(std::ofstream& out, const std::vector<double>& v) {
  // Little-endian hosts write doubles directly.
  static_assert(std::endian::native == std::endian::little);
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

}  // namespace

void save_parameters(const std::string& path, const LayerPlan& plan,
                     const Parameters& params) {
  if (params.kernels.size() != plan.kernels.size())
    throw contract_error("save_parameters: parameters do not match plan");

  json layers = json::array();
  size_t offset = 0;
  for (size_t k = 0; k < plan.kernels.size(); ++k) {
    const KernelShape& ks = plan.kernels[k];
    size_t wbytes = params.kernels[k].weights.size() * sizeof(double);
    size_t bbytes = params.kernels[k].bias.size() * sizeof(double);
    layers.push_back({{"name", ks.name},
                      {"size", ks.size},
                      {"in_depth", ks.in_depth},
                      {"out_depth", ks.out_depth},
                      {"dilation", ks.dilation},
                      {"weights_offset", offset},
                      {"bias_offset", offset + wbytes}});
    offset += wbytes + bbytes;
  }
  json header{{"spec", spec_to_json(plan.spec)},
              {"input_scale", params.input_scale},
              {"dtype", "f64"},
              {"endianness", "LE"},
              {"payload_bytes", offset},
              {"layers", layers}};
  std::string htext = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write model file: " + path);
  out.write(kMagic, sizeof(kMagic));
  uint32_t hlen = static_cast<uint32_t>(htext.size());
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(htext.data(), static_cast<std::streamsize>(htext.size()));
  for (const ConvKernel& k : params.kernels) {
    write_doubles(out, k.weights);
    write_doubles(out, k.bias);
  }
  if (!out) throw data_error("short write on model file: " + path);
}

LoadedModel load_parameters(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw data_error("cannot open model file: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw data_error("not a model file (bad magic): " + path);
  uint32_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string htext(hlen, '\0');
  in.read(htext.data(), hlen);
  if (!in) throw data_error("truncated model header: " + path);

  json header = json::parse(htext, nullptr, false);
  if (header.is_discarded())
    throw data_error("malformed model header: " + path);

  LoadedModel model;
  model.spec = spec_from_json(header.at("spec"));
  model.plan = build(model.spec);
  model.params = zero_parameters(model.plan);
  model.params.input_scale = header.at("input_scale").get<double>();

  const json& layers = header.at("layers");
  if (layers.size() != model.plan.kernels.size())
    throw data_error("model layer count does not match its spec: " + path);
  for (size_t k = 0; k < model.plan.kernels.size(); ++k) {
    if (layers[k].at("name").get<std::string>() != model.plan.kernels[k].name)
      throw data_error("model layer names do not match its spec: " + path);
    ConvKernel& kernel = model.params.kernels[k];
    in.read(reinterpret_cast<char*>(kernel.weights.data()),
            static_cast<std::streamsize>(kernel.weights.size() *
                                         sizeof(double)));
    in.read(reinterpret_cast<char*>(kernel.bias.data()),
            static_cast<std::streamsize>(kernel.bias.size() * sizeof(double)));
  }
  if (!in) throw data_error("truncated model payload: " + path);
  return model;
}

}  // namespace tomonet
