#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "tomonet/errors.hpp"

namespace tomonet {

// Dense height x width x depth grid of doubles, the carrier for images,
// feature maps and per-pixel label data. Indexed as (x, y, d) with x along
// width and y along height; storage puts depth contiguous per pixel:
// data[(y * width + x) * depth + d].
class Tensor3 {
 public:
  Tensor3() = default;

  Tensor3(int height, int width, int depth, double fill = 0.0)
      : height_(height),
        width_(width),
        depth_(depth),
        data_(checked_size(height, width, depth), fill) {}

  int height() const { return height_; }
  int width() const { return width_; }
  int depth() const { return depth_; }
  size_t size() const { return data_.size(); }

  double& at(int x, int y, int d) { return data_[index(x, y, d)]; }
  double at(int x, int y, int d) const { return data_[index(x, y, d)]; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool same_shape(const Tensor3& o) const {
    return height_ == o.height_ && width_ == o.width_ && depth_ == o.depth_;
  }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

  size_t index(int x, int y, int d) const {
    return (static_cast<size_t>(y) * width_ + x) * depth_ + d;
  }

 private:
  static size_t checked_size(int height, int width, int depth) {
    if (height <= 0 || width <= 0 || depth <= 0)
      throw contract_error("Tensor3: dimensions must be positive");
    return static_cast<size_t>(height) * width * depth;
  }

  int height_ = 0;
  int width_ = 0;
  int depth_ = 0;
  std::vector<double> data_;
};

inline Tensor3 zeros_like(const Tensor3& t) {
  return Tensor3(t.height(), t.width(), t.depth(), 0.0);
}

inline void require_same_shape(const Tensor3& a, const Tensor3& b,
                               const char* where) {
  if (!a.same_shape(b))
    throw contract_error(std::string(where) + ": shape mismatch");
}

}  // namespace tomonet
