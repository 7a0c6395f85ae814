#pragma once

#include <cstdint>
#include <random>

namespace tomonet {

// Seeded random source with hand-rolled distributions so that a given seed
// produces the same stream on every platform and standard library.
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(scramble(seed)) {}

  uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1).
  double uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi);

  // Standard normal via Box-Muller, one spare value cached.
  double normal();

  // Poisson sample; Knuth multiplication for small means, transformed
  // rejection (PTRS) for large ones.
  long long poisson(double mean);

  // Derives an independent seed for a sub-stream, e.g. per dataset record.
  static uint64_t derive(uint64_t seed, uint64_t stream);

 private:
  static uint64_t scramble(uint64_t x);

  std::mt19937_64 engine_;
  double spare_normal_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tomonet
