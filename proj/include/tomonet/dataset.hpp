#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tomonet/phantom.hpp"
#include "tomonet/radon.hpp"
#include "tomonet/sinogram.hpp"
#include "tomonet/tensor.hpp"

namespace tomonet {

// Simulation parameters for one dataset. mix gives the
// shepp_logan:ellipses:hot_spots ratio as "a:b:c"; records cycle through the
// kinds so the ratio is exact over each cycle.
struct SimConfig {
  int size = 64;
  int n_angles = 96;
  int n_bins = 0;  // 0 = derived from size
  double counts = 1e6;
  std::string mix = "1:1:1";
  uint64_t seed = 1234;

  int resolved_bins() const {
    return n_bins > 0 ? n_bins : default_n_bins(size);
  }
  void validate() const;
};

// One supervised pair: the filtered back projection of the Poisson-degraded
// sinogram as input, the phantom as target. The sinogram is kept in image
// units (the Poisson counts divided by the count scale) so that the input
// converges to the target as counts grow; it also feeds the iterative
// baseline and the benchmarks.
struct TrainRecord {
  Tensor3 input;
  Tensor3 target;
  std::vector<int> labels;
  int n_labels = 0;
  PhantomKind kind = PhantomKind::Ellipses;
  Sinogram sinogram;
};

PhantomKind mix_kind(const std::string& mix, int index);

TrainRecord make_record(const SimConfig& cfg, int index);

// Deterministic per (cfg.seed, index); generation parallelizes across
// records.
std::vector<TrainRecord> make_dataset(int n_records, const SimConfig& cfg);

// Dataset directory layout: manifest.json plus per-record raw files
// rec_NNNNN_{input,target,labels,sino}.raw.
void write_dataset(const std::string& dir,
                   const std::vector<TrainRecord>& records,
                   const SimConfig& cfg);
struct LoadedDataset {
  SimConfig config;
  std::vector<TrainRecord> records;
};
LoadedDataset read_dataset(const std::string& dir, bool with_sinograms = true);

}  // namespace tomonet
