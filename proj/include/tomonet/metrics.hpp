#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tomonet/tensor.hpp"

namespace tomonet {

double mse(const Tensor3& a, const Tensor3& b);

// Peak signal-to-noise ratio with the peak taken from the reference image.
double psnr(const Tensor3& recon, const Tensor3& truth);

// Zero-mean normalized cross-correlation, the structural proxy reported per
// record.
double ncc(const Tensor3& a, const Tensor3& b);

struct RoiStat {
  int label = 0;
  double mean = 0.0;
  long long pixels = 0;
};

// Mean image value per label 1..n_labels. Labels without pixels are excluded
// with a warning on stderr.
std::vector<RoiStat> roi_means(const Tensor3& image,
                               const std::vector<int>& labels, int n_labels);

struct Correlation {
  double r = 0.0;
  double slope = 0.0;
  double intercept = 0.0;
};

// Pearson correlation and least-squares regression line of ys on xs.
// Requires >= 3 pairs and nonzero variance on both sides.
Correlation correlate(const std::vector<double>& xs,
                      const std::vector<double>& ys);

struct SpotRecovery {
  int label = 0;
  double truth_contrast = 0.0;  // truth ROI mean minus truth background mean
  double recon_contrast = 0.0;
  double ratio = 0.0;  // recon_contrast / truth_contrast
};

// Hot-spot contrast recovery for HotSpots phantoms, where label 1 is the
// warm background field and labels >= 2 are the spots.
std::vector<SpotRecovery> hot_spot_recovery(const Tensor3& truth,
                                            const std::vector<int>& labels,
                                            int n_labels,
                                            const Tensor3& recon);

// Median wall-clock milliseconds of fn over `repetitions` timed runs after
// `warmups` untimed ones.
double median_ms(const std::function<void()>& fn, int repetitions,
                 int warmups = 2);

// Scatter plot of paired values with the identity line (gray) and the
// regression line (dark), written as a binary PPM raster.
void write_scatter_ppm(const std::string& path, const std::vector<double>& xs,
                       const std::vector<double>& ys, const Correlation& fit);

}  // namespace tomonet
