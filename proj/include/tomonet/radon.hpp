#pragma once

#include <cstdint>
#include <vector>

#include "tomonet/sinogram.hpp"
#include "tomonet/tensor.hpp"

namespace tomonet {

// Parallel-beam projector pair. radon splats each pixel's value into the two
// detector bins adjacent to its projection coordinate (linear interpolation
// weights), which conserves per-angle mass exactly; back_project applies the
// matching interpolation in reverse, so the two maps are exact adjoints up to
// the pi/n_angles back-projection scale.

// Smallest detector size that holds every projection of an n x n image.
int default_n_bins(int size);

// Line-integral projections at angles theta_k = k*pi/n_angles. Requires a
// depth-1 image and n_bins >= image diagonal.
Sinogram radon(const Tensor3& image, int n_angles, int n_bins);

// Same projector over an explicit angle list (used by the iterative
// reconstructor's angle subsets).
Sinogram radon_at_angles(const Tensor3& image,
                         const std::vector<double>& angles, int n_bins);

// Unscaled adjoint of radon_at_angles, accumulating rows of `sino` whose
// indices appear in `rows` (empty = all rows).
Tensor3 back_project_rows(const Sinogram& sino, int size,
                          const std::vector<int>& rows);

// Adjoint of radon scaled by pi/n_angles, the back-projection step of FBP.
Tensor3 back_project(const Sinogram& sino, int size);

// Ramp (|frequency|) filtering of each projection via FFT with zero-padding
// to the next power of two >= 2 * n_bins. The returned sinogram is truncated
// back to n_bins; the padded response (whose DC is exactly killed) is
// available through ramp_filter_line.
Sinogram ramp_filter(const Sinogram& sino);
std::vector<double> ramp_filter_line(const std::vector<double>& projection);

// Filtered back projection: back_project(ramp_filter(sino)).
Tensor3 fbp(const Sinogram& sino, int size);

// Scales `sino` so its total equals total_counts, then draws each bin from a
// Poisson distribution with that mean. Output is integer-valued counts.
Sinogram poisson_sample(const Sinogram& sino, double total_counts,
                        uint64_t seed);

}  // namespace tomonet
