#pragma once

#include <vector>

#include "tomonet/errors.hpp"

namespace tomonet {

// Projection-space data: one row per projection angle, one column per
// detector bin. Angles are strictly increasing in [0, pi).
struct Sinogram {
  int n_angles = 0;
  int n_bins = 0;
  std::vector<double> angles;
  std::vector<double> data;

  Sinogram() = default;
  Sinogram(int n_angles, int n_bins)
      : n_angles(n_angles),
        n_bins(n_bins),
        angles(n_angles, 0.0),
        data(static_cast<size_t>(n_angles) * n_bins, 0.0) {
    if (n_angles <= 0 || n_bins <= 0)
      throw contract_error("Sinogram: dimensions must be positive");
  }

  double& at(int angle, int bin) {
    return data[static_cast<size_t>(angle) * n_bins + bin];
  }
  double at(int angle, int bin) const {
    return data[static_cast<size_t>(angle) * n_bins + bin];
  }

  bool same_shape(const Sinogram& o) const {
    return n_angles == o.n_angles && n_bins == o.n_bins;
  }
};

// Evenly spaced projection angles theta_k = k * pi / n.
std::vector<double> make_angles(int n);

}  // namespace tomonet
