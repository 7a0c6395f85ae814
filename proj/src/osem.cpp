#include "tomonet/osem.hpp"

#include <cmath>

namespace tomonet {

void OsemConfig::validate(int n_angles) const {
  if (n_subsets < 1 || n_iterations < 1)
    throw config_error("osem: n_subsets and n_iterations must be >= 1");
  if (n_angles % n_subsets != 0)
    throw config_error("osem: n_subsets must divide n_angles");
  if (!(epsilon > 0.0) || epsilon > 1e-3)
    throw config_error("osem: epsilon must be in (0, 1e-3]");
  if (gauss_sigma < 0.0) throw config_error("osem: gauss_sigma must be >= 0");
}

namespace {

// Subset j takes angles j, j + n_subsets, j + 2*n_subsets, ...
std::vector<std::vector<int>> subset_rows(int n_angles, int n_subsets) {
  std::vector<std::vector<int>> rows(n_subsets);
  for (int a = 0; a < n_angles; ++a) rows[a % n_subsets].push_back(a);
  return rows;
}

}  // namespace

OsemResult osem_reconstruct(const Sinogram& sino, int size,
                            const OsemConfig& cfg, const Tensor3* initial) {
  cfg.validate(sino.n_angles);
  for (double v : sino.data)
    if (v < 0.0) throw contract_error("osem: negative sinogram entry");

  OsemResult result;
  double total = 0.0;
  for (double v : sino.data) total += v;
  if (total == 0.0) {
    result.image = Tensor3(size, size, 1, 0.0);
    result.zero_data = true;
    return result;
  }

  auto rows = subset_rows(sino.n_angles, cfg.n_subsets);

  // Restrict the measured sinogram to each subset once, and precompute the
  // per-subset sensitivity images A_S^T 1.
  std::vector<Sinogram> measured(cfg.n_subsets);
  std::vector<Tensor3> sensitivity;
  sensitivity.reserve(cfg.n_subsets);
  for (int j = 0; j < cfg.n_subsets; ++j) {
    Sinogram part(static_cast<int>(rows[j].size()), sino.n_bins);
    for (size_t k = 0; k < rows[j].size(); ++k) {
      part.angles[k] = sino.angles[rows[j][k]];
      for (int b = 0; b < sino.n_bins; ++b)
        part.at(static_cast<int>(k), b) = sino.at(rows[j][k], b);
    }
    measured[j] = std::move(part);
    Sinogram ones = measured[j];
    for (double& v : ones.data) v = 1.0;
    sensitivity.push_back(back_project_rows(ones, size, {}));
  }

  Tensor3 x(size, size, 1, 1.0);
  if (initial) {
    if (initial->height() != size || initial->width() != size ||
        initial->depth() != 1)
      throw contract_error("osem: initial image shape mismatch");
    for (double v : initial->data())
      if (v < 0.0) throw contract_error("osem: negative initial image entry");
    x = *initial;
  }
  for (int it = 0; it < cfg.n_iterations; ++it) {
    for (int j = 0; j < cfg.n_subsets; ++j) {
      const Sinogram& y = measured[j];
      Sinogram ratio = radon_at_angles(x, y.angles, y.n_bins);
      for (size_t i = 0; i < ratio.data.size(); ++i)
        ratio.data[i] = y.data[i] / (ratio.data[i] + cfg.epsilon);
      Tensor3 update = back_project_rows(ratio, size, {});
      const Tensor3& sens = sensitivity[j];
      for (size_t i = 0; i < x.size(); ++i) {
        double s = sens.data()[i];
        x.data()[i] = s > 0.0 ? x.data()[i] * update.data()[i] / s : 0.0;
      }
    }
  }
  if (!x.all_finite()) throw numeric_error("osem: non-finite reconstruction");
  result.image = cfg.gauss_sigma > 0.0 ? gaussian_blur(x, cfg.gauss_sigma)
                                       : std::move(x);
  return result;
}

double poisson_loglik(const Sinogram& sino, const Tensor3& image,
                      double epsilon) {
  for (double v : image.data())
    if (v < 0.0) throw contract_error("poisson_loglik: negative image entry");
  Sinogram fwd = radon_at_angles(image, sino.angles, sino.n_bins);
  double ll = 0.0;
  for (size_t i = 0; i < sino.data.size(); ++i) {
    double y = sino.data[i];
    double yhat = fwd.data[i];
    ll += y * std::log(yhat + epsilon) - yhat;
  }
  return ll;
}

Tensor3 gaussian_blur(const Tensor3& image, double sigma) {
  if (sigma <= 0.0) return image;
  int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += kernel[i + radius];
  }
  for (double& v : kernel) v /= sum;

  const int h = image.height(), w = image.width(), d = image.depth();
  Tensor3 tmp(h, w, d), out(h, w, d);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          int xx = std::clamp(x + i, 0, w - 1);
          acc += kernel[i + radius] * image.at(xx, y, c);
        }
        tmp.at(x, y, c) = acc;
      }
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < d; ++c) {
        double acc = 0.0;
        for (int i = -radius; i <= radius; ++i) {
          int yy = std::clamp(y + i, 0, h - 1);
          acc += kernel[i + radius] * tmp.at(x, yy, c);
        }
        out.at(x, y, c) = acc;
      }
  return out;
}

}  // namespace tomonet
