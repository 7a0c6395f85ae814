#include "tomonet/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <limits>

namespace tomonet {

double mse(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "mse");
  double sum = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double d = a.data()[i] - b.data()[i];
    sum += d * d;
  }
  return sum / static_cast<double>(a.size());
}

double psnr(const Tensor3& recon, const Tensor3& truth) {
  double peak = 0.0;
  for (double v : truth.data()) peak = std::max(peak, std::fabs(v));
  double err = mse(recon, truth);
  if (err == 0.0) return std::numeric_limits<double>::infinity();
  if (peak == 0.0) return -std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / err);
}

double ncc(const Tensor3& a, const Tensor3& b) {
  require_same_shape(a, b, "ncc");
  const double n = static_cast<double>(a.size());
  double ma = 0.0, mb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    ma += a.data()[i];
    mb += b.data()[i];
  }
  ma /= n;
  mb /= n;
  double cov = 0.0, va = 0.0, vb = 0.0;
  for (size_t i = 0; i < a.size(); ++i) {
    double da = a.data()[i] - ma, db = b.data()[i] - mb;
    cov += da * db;
    va += da * da;
    vb += db * db;
  }
  if (va == 0.0 || vb == 0.0)
    throw data_error("ncc: an input has zero variance");
  return cov / std::sqrt(va * vb);
}

std::vector<RoiStat> roi_means(const Tensor3& image,
                               const std::vector<int>& labels, int n_labels) {
  if (labels.size() != static_cast<size_t>(image.height()) * image.width())
    throw contract_error("roi_means: label map shape mismatch");
  if (image.depth() != 1)
    throw contract_error("roi_means: image depth must be 1");

  std::vector<RoiStat> stats(n_labels);
  for (int l = 0; l < n_labels; ++l) stats[l].label = l + 1;
  for (size_t i = 0; i < labels.size(); ++i) {
    int l = labels[i];
    if (l < 1 || l > n_labels) continue;
    stats[l - 1].mean += image.data()[i];
    stats[l - 1].pixels += 1;
  }
  std::vector<RoiStat> out;
  for (RoiStat& s : stats) {
    if (s.pixels == 0) {
      std::cerr << "warning: ROI label " << s.label
                << " has no pixels; excluded\n";
      continue;
    }
    s.mean /= static_cast<double>(s.pixels);
    out.push_back(s);
  }
  return out;
}

Correlation correlate(const std::vector<double>& xs,
                      const std::vector<double>& ys) {
  if (xs.size() != ys.size())
    throw contract_error("correlate: length mismatch");
  const size_t n = xs.size();
  if (n < 3) throw data_error("correlate: need at least 3 pairs");
  double mx = 0.0, my = 0.0;
  for (size_t i = 0; i < n; ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, syy = 0.0, sxy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    double dx = xs[i] - mx, dy = ys[i] - my;
    sxx += dx * dx;
    syy += dy * dy;
    sxy += dx * dy;
  }
  if (sxx == 0.0 || syy == 0.0)
    throw data_error("correlate: zero variance, correlation undefined");
  Correlation c;
  c.r = sxy / std::sqrt(sxx * syy);
  c.slope = sxy / sxx;
  c.intercept = my - c.slope * mx;
  return c;
}

std::vector<SpotRecovery> hot_spot_recovery(const Tensor3& truth,
                                            const std::vector<int>& labels,
                                            int n_labels,
                                            const Tensor3& recon) {
  if (n_labels < 2)
    throw contract_error("hot_spot_recovery: phantom has no spot labels");
  std::vector<RoiStat> truth_stats = roi_means(truth, labels, n_labels);
  std::vector<RoiStat> recon_stats = roi_means(recon, labels, n_labels);
  if (truth_stats.empty() || truth_stats.front().label != 1)
    throw contract_error("hot_spot_recovery: missing background label 1");

  double truth_bg = truth_stats.front().mean;
  double recon_bg = recon_stats.front().mean;
  std::vector<SpotRecovery> out;
  for (size_t i = 1; i < truth_stats.size(); ++i) {
    SpotRecovery s;
    s.label = truth_stats[i].label;
    s.truth_contrast = truth_stats[i].mean - truth_bg;
    s.recon_contrast = recon_stats[i].mean - recon_bg;
    s.ratio = s.truth_contrast != 0.0 ? s.recon_contrast / s.truth_contrast
                                      : 0.0;
    out.push_back(s);
  }
  return out;
}

double median_ms(const std::function<void()>& fn, int repetitions,
                 int warmups) {
  if (repetitions < 1)
    throw config_error("median_ms: repetitions must be >= 1");
  for (int i = 0; i < warmups; ++i) fn();
  std::vector<double> times(repetitions);
  for (int i = 0; i < repetitions; ++i) {
    auto t0 = std::chrono::steady_clock::now();
    fn();
    auto t1 = std::chrono::steady_clock::now();
    times[i] = std::chrono::duration<double, std::milli>(t1 - t0).count();
  }
  std::sort(times.begin(), times.end());
  size_t mid = times.size() / 2;
  return times.size() % 2 ? times[mid] : 0.5 * (times[mid - 1] + times[mid]);
}

namespace {

struct Raster {
  int size;
  std::vector<unsigned char> rgb;

  explicit Raster(int size) : size(size), rgb(3ull * size * size, 255) {}

  void set(int x, int y, unsigned char r, unsigned char g, unsigned char b) {
    if (x < 0 || x >= size || y < 0 || y >= size) return;
    size_t i = 3ull * (static_cast<size_t>(y) * size + x);
    rgb[i] = r;
    rgb[i + 1] = g;
    rgb[i + 2] = b;
  }

  void disc(int cx, int cy, int radius, unsigned char r, unsigned char g,
            unsigned char b) {
    for (int dy = -radius; dy <= radius; ++dy)
      for (int dx = -radius; dx <= radius; ++dx)
        if (dx * dx + dy * dy <= radius * radius)
          set(cx + dx, cy + dy, r, g, b);
  }
};

}  // namespace

void write_scatter_ppm(const std::string& path, const std::vector<double>& xs,
                       const std::vector<double>& ys, const Correlation& fit) {
  if (xs.size() != ys.size() || xs.empty())
    throw contract_error("write_scatter_ppm: bad input lengths");
  const int size = 512, margin = 32;
  Raster img(size);

  double lo = xs[0], hi = xs[0];
  for (double v : xs) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  for (double v : ys) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi <= lo) hi = lo + 1.0;
  double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto to_px = [&](double v) {
    return margin + static_cast<int>((v - lo) / (hi - lo) *
                                     (size - 2 * margin));
  };

  // axes
  for (int i = margin; i <= size - margin; ++i) {
    img.set(i, size - margin, 0, 0, 0);
    img.set(margin, i, 0, 0, 0);
  }
  // identity line (gray) and regression line (dark blue), drawn by x sweep
  for (int px = margin; px <= size - margin; ++px) {
    double v = lo + (px - margin) / static_cast<double>(size - 2 * margin) *
                        (hi - lo);
    img.set(px, size - to_px(v), 160, 160, 160);
    double fitted = fit.slope * v + fit.intercept;
    if (fitted >= lo && fitted <= hi)
      img.set(px, size - to_px(fitted), 30, 30, 160);
  }
  for (size_t i = 0; i < xs.size(); ++i)
    img.disc(to_px(xs[i]), size - to_px(ys[i]), 3, 200, 40, 40);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw data_error("cannot write plot file: " + path);
  out << "P6\n" << size << " " << size << "\n255\n";
  out.write(reinterpret_cast<const char*>(img.rgb.data()),
            static_cast<std::streamsize>(img.rgb.size()));
}

}  // namespace tomonet
