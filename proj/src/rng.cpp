#include "tomonet/rng.hpp"

#include <cmath>

#include "tomonet/errors.hpp"

namespace tomonet {

uint64_t Rng::scramble(uint64_t x) {
  // SplitMix64 finalizer; spreads small consecutive seeds apart.
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

uint64_t Rng::derive(uint64_t seed, uint64_t stream) {
  return scramble(scramble(seed) + stream);
}

int Rng::uniform_int(int lo, int hi) {
  if (hi < lo) throw contract_error("Rng::uniform_int: empty range");
  uint64_t span = static_cast<uint64_t>(hi) - static_cast<uint64_t>(lo) + 1;
  return lo + static_cast<int>(engine_() % span);
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_normal_;
  }
  double u1 = uniform();
  double u2 = uniform();
  double radius = std::sqrt(-2.0 * std::log1p(-u1));
  double angle = 2.0 * M_PI * u2;
  spare_normal_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

long long Rng::poisson(double mean) {
  if (mean < 0.0 || !std::isfinite(mean))
    throw contract_error("Rng::poisson: mean must be finite and nonnegative");
  if (mean == 0.0) return 0;

  if (mean < 30.0) {
    // Knuth: multiply uniforms until the product drops below exp(-mean).
    double limit = std::exp(-mean);
    double prod = uniform();
    long long k = 0;
    while (prod > limit) {
      prod *= uniform();
      ++k;
    }
    return k;
  }

  // PTRS transformed rejection (Hoermann 1993).
  double b = 0.931 + 2.53 * std::sqrt(mean);
  double a = -0.059 + 0.02483 * b;
  double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  double v_r = 0.9277 - 3.6224 / (b - 2.0);
  double log_mean = std::log(mean);
  for (;;) {
    double u = uniform() - 0.5;
    double v = uniform();
    double us = 0.5 - std::fabs(u);
    double kf = std::floor((2.0 * a / us + b) * u + mean + 0.43);
    if (us >= 0.07 && v <= v_r) return static_cast<long long>(kf);
    if (kf < 0.0 || (us < 0.013 && v > us)) continue;
    double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
    double rhs = kf * log_mean - mean - std::lgamma(kf + 1.0);
    if (lhs <= rhs) return static_cast<long long>(kf);
  }
}

}  // namespace tomonet
