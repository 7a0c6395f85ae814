#include "tomonet/radon.hpp"

#include <cmath>
#include <complex>
#include <numeric>

#include "tomonet/rng.hpp"
#include "tomonet/threads.hpp"

namespace tomonet {

std::vector<double> make_angles(int n) {
  std::vector<double> angles(n);
  for (int k = 0; k < n; ++k) angles[k] = k * M_PI / n;
  return angles;
}

int default_n_bins(int size) {
  int bins = static_cast<int>(std::ceil(size * std::sqrt(2.0))) + 2;
  return bins | 1;  // odd, so a central bin exists
}

namespace {

void check_projection_geometry(const Tensor3& image, int n_angles,
                               int n_bins) {
  if (image.depth() != 1)
    throw contract_error("radon: image depth must be 1");
  if (n_angles <= 0) throw config_error("radon: n_angles must be positive");
  double diagonal =
      std::hypot(static_cast<double>(image.width()), image.height());
  if (n_bins < static_cast<int>(std::ceil(diagonal)))
    throw config_error("radon: n_bins smaller than image diagonal");
}

}  // namespace

Sinogram radon_at_angles(const Tensor3& image,
                         const std::vector<double>& angles, int n_bins) {
  check_projection_geometry(image, static_cast<int>(angles.size()), n_bins);
  const int h = image.height(), w = image.width();
  const double cx = (w - 1) / 2.0, cy = (h - 1) / 2.0;
  const double bin_center = (n_bins - 1) / 2.0;

  Sinogram sino(static_cast<int>(angles.size()), n_bins);
  sino.angles = angles;
  parallel_for(0, sino.n_angles, [&](int a) {
    const double c = std::cos(angles[a]), s = std::sin(angles[a]);
    double* row = sino.data.data() + static_cast<size_t>(a) * n_bins;
    for (int y = 0; y < h; ++y) {
      double sy = (y - cy) * s + bin_center;
      for (int x = 0; x < w; ++x) {
        double v = image.at(x, y, 0);
        if (v == 0.0) continue;
        double pos = (x - cx) * c + sy;
        int lo = static_cast<int>(std::floor(pos));
        double frac = pos - lo;
        if (lo >= 0 && lo < n_bins) row[lo] += v * (1.0 - frac);
        if (lo + 1 >= 0 && lo + 1 < n_bins) row[lo + 1] += v * frac;
      }
    }
  });
  return sino;
}

Sinogram radon(const Tensor3& image, int n_angles, int n_bins) {
  return radon_at_angles(image, make_angles(n_angles), n_bins);
}

Tensor3 back_project_rows(const Sinogram& sino, int size,
                          const std::vector<int>& rows) {
  std::vector<int> all;
  const std::vector<int>* use = &rows;
  if (rows.empty()) {
    all.resize(sino.n_angles);
    std::iota(all.begin(), all.end(), 0);
    use = &all;
  }
  const double cx = (size - 1) / 2.0;
  const double bin_center = (sino.n_bins - 1) / 2.0;

  Tensor3 image(size, size, 1);
  parallel_for(0, size, [&](int y) {
    for (int a : *use) {
      const double c = std::cos(sino.angles[a]), s = std::sin(sino.angles[a]);
      const double* row = sino.data.data() + static_cast<size_t>(a) * sino.n_bins;
      double sy = (y - cx) * s + bin_center;
      for (int x = 0; x < size; ++x) {
        double pos = (x - cx) * c + sy;
        int lo = static_cast<int>(std::floor(pos));
        double frac = pos - lo;
        double v = 0.0;
        if (lo >= 0 && lo < sino.n_bins) v += row[lo] * (1.0 - frac);
        if (lo + 1 >= 0 && lo + 1 < sino.n_bins) v += row[lo + 1] * frac;
        image.at(x, y, 0) += v;
      }
    }
  });
  return image;
}

Tensor3 back_project(const Sinogram& sino, int size) {
  Tensor3 image = back_project_rows(sino, size, {});
  double scale = M_PI / sino.n_angles;
  for (double& v : image.data()) v *= scale;
  return image;
}

namespace {

// Iterative radix-2 FFT; n must be a power of two.
void fft_pow2(std::vector<std::complex<double>>& buf, bool inverse) {
  const size_t n = buf.size();
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(buf[i], buf[j]);
  }
  for (size_t len = 2; len <= n; len <<= 1) {
    double angle = 2.0 * M_PI / len * (inverse ? 1.0 : -1.0);
    std::complex<double> root(std::cos(angle), std::sin(angle));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t k = 0; k < len / 2; ++k) {
        std::complex<double> even = buf[i + k];
        std::complex<double> odd = buf[i + k + len / 2] * w;
        buf[i + k] = even + odd;
        buf[i + k + len / 2] = even - odd;
        w *= root;
      }
    }
  }
  if (inverse)
    for (auto& v : buf) v /= static_cast<double>(n);
}

size_t next_pow2(size_t n) {
  size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace

namespace {

// Frequency response of the band-limited ramp at unit sample spacing: the
// DFT of the real-space kernel h[0] = 1/4, h[odd k] = -1/(pi k)^2, h[even]=0
// (Kak & Slaney), with the residual truncation DC explicitly zeroed. Using
// the kernel's transform instead of the raw |f| staircase avoids the
// low-frequency bias that shows up as cupping in the reconstruction.
std::vector<double> ramp_response(size_t m) {
  std::vector<std::complex<double>> kernel(m, 0.0);
  kernel[0] = 0.25;
  for (size_t k = 1; k <= m / 2; k += 2) {
    double v = -1.0 / (M_PI * M_PI * static_cast<double>(k) * k);
    kernel[k] = v;
    kernel[m - k] = v;
  }
  fft_pow2(kernel, false);
  std::vector<double> response(m);
  for (size_t k = 0; k < m; ++k) response[k] = kernel[k].real();
  response[0] = 0.0;
  return response;
}

}  // namespace

std::vector<double> ramp_filter_line(const std::vector<double>& projection) {
  const size_t n = projection.size();
  const size_t m = next_pow2(2 * n);
  std::vector<double> response = ramp_response(m);

  // Pad by edge replication (split between the two circular neighbours), so
  // detector rows that do not decay to zero are not treated as steps. Real
  // projections end in zero bins, for which this equals zero padding.
  std::vector<std::complex<double>> buf(m);
  for (size_t i = 0; i < n; ++i) buf[i] = projection[i];
  size_t split = n + (m - n) / 2;
  for (size_t i = n; i < m; ++i)
    buf[i] = i < split ? projection[n - 1] : projection[0];

  fft_pow2(buf, false);
  for (size_t k = 0; k < m; ++k) buf[k] *= response[k];
  fft_pow2(buf, true);
  std::vector<double> out(m);
  for (size_t k = 0; k < m; ++k) out[k] = buf[k].real();
  return out;
}

Sinogram ramp_filter(const Sinogram& sino) {
  Sinogram out = sino;
  parallel_for(0, sino.n_angles, [&](int a) {
    std::vector<double> line(sino.n_bins);
    for (int b = 0; b < sino.n_bins; ++b) line[b] = sino.at(a, b);
    std::vector<double> filtered = ramp_filter_line(line);
    for (int b = 0; b < sino.n_bins; ++b) out.at(a, b) = filtered[b];
  });
  return out;
}

Tensor3 fbp(const Sinogram& sino, int size) {
  return back_project(ramp_filter(sino), size);
}

Sinogram poisson_sample(const Sinogram& sino, double total_counts,
                        uint64_t seed) {
  if (total_counts <= 0.0)
    throw contract_error("poisson_sample: total_counts must be positive");
  double total = 0.0;
  for (double v : sino.data) {
    if (v < 0.0)
      throw contract_error("poisson_sample: negative sinogram entry");
    total += v;
  }
  Sinogram out = sino;
  if (total == 0.0) return out;  // Poisson(0) is identically 0

  const double scale = total_counts / total;
  Rng rng(seed);
  for (double& v : out.data)
    v = static_cast<double>(rng.poisson(v * scale));
  return out;
}

}  // namespace tomonet
