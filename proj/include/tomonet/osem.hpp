#pragma once

#include "tomonet/radon.hpp"
#include "tomonet/sinogram.hpp"
#include "tomonet/tensor.hpp"

namespace tomonet {

struct OsemConfig {
  int n_subsets = 8;
  int n_iterations = 10;    // full passes over all subsets
  double epsilon = 1e-10;   // division guard on the forward model
  double gauss_sigma = 0.0; // optional post-reconstruction smoothing, pixels

  void validate(int n_angles) const;
};

struct OsemResult {
  Tensor3 image;
  bool zero_data = false;  // input sinogram was identically zero
};

// Ordered-subset expectation maximisation with the multiplicative update
//   x <- x / (A_S^T 1) * A_S^T( y_S / (A_S x + eps) )
// cycling angle subsets S chosen by stride interleaving. n_subsets = 1 is
// plain MLEM. Starts from a uniform positive image unless `initial` is
// given. The result is nonnegative everywhere; pixels outside every
// projection ray stay at zero.
OsemResult osem_reconstruct(const Sinogram& sino, int size,
                            const OsemConfig& cfg,
                            const Tensor3* initial = nullptr);

// Poisson log-likelihood sum_bins [ y * log(yhat + eps) - yhat ] with
// yhat = radon(image) on the sinogram's own angles.
double poisson_loglik(const Sinogram& sino, const Tensor3& image,
                      double epsilon = 1e-10);

// Separable Gaussian blur, truncated at three sigma. sigma <= 0 is identity.
Tensor3 gaussian_blur(const Tensor3& image, double sigma);

}  // namespace tomonet
