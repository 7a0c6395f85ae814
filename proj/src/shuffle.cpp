#include "tomonet/shuffle.hpp"

namespace tomonet {

namespace {
void check_rate(int r) {
  if (r < 2) throw contract_error("shuffle: rate r must be >= 2");
}
}  // namespace

Tensor3 ps_up(const Tensor3& t, int r) {
  check_rate(r);
  if (t.depth() % (r * r) != 0)
    throw contract_error("ps_up: depth not divisible by r^2");
  const int d_out = t.depth() / (r * r);
  Tensor3 out(t.height() * r, t.width() * r, d_out);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x) {
      int channel_base = d_out * ((y % r) * r + (x % r));
      for (int d = 0; d < d_out; ++d)
        out.at(x, y, d) = t.at(x / r, y / r, channel_base + d);
    }
  return out;
}

Tensor3 ps_down(const Tensor3& t, int r) {
  check_rate(r);
  if (t.height() % r != 0 || t.width() % r != 0)
    throw contract_error("ps_down: spatial dims not divisible by r");
  const int d_in = t.depth();
  Tensor3 out(t.height() / r, t.width() / r, d_in * r * r);
  for (int y = 0; y < out.height(); ++y)
    for (int x = 0; x < out.width(); ++x)
      for (int d = 0; d < out.depth(); ++d) {
        int block = d / d_in;
        out.at(x, y, d) = t.at(x * r + block % r, y * r + block / r, d % d_in);
      }
  return out;
}

Tensor3 ps_up_grad(const Tensor3& upstream, int r) {
  return ps_down(upstream, r);
}

Tensor3 ps_down_grad(const Tensor3& upstream, int r) {
  return ps_up(upstream, r);
}

}  // namespace tomonet
