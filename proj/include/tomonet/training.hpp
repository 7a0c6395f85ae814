#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "tomonet/dataset.hpp"
#include "tomonet/network.hpp"
#include "tomonet/tensor.hpp"

namespace tomonet {

struct TrainConfig {
  double learning_rate = 0.001;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double decay = 0.0;
  int batch_size = 8;
  int epochs = 20;
  uint64_t seed = 0;
  double validation_fraction = 0.1;
  double grad_clip = 0.0;  // 0 disables clipping
  std::string checkpoint_dir;  // empty = no per-epoch checkpoints

  void validate() const;
};

struct MseResult {
  double loss = 0.0;
  Tensor3 grad;
};

// Mean squared error and its gradient 2*(pred - target)/count.
MseResult mse_loss(const Tensor3& pred, const Tensor3& target);

// First/second moment accumulators, one pair per parameter vector.
struct AdamState {
  std::vector<std::vector<double>> m_weights, v_weights;
  std::vector<std::vector<double>> m_bias, v_bias;
};
AdamState make_adam_state(const Parameters& params);

// One Adam update on a flat parameter vector; t is the 1-based step index.
void adam_update(std::vector<double>& theta, const std::vector<double>& grad,
                 std::vector<double>& m, std::vector<double>& v, long long t,
                 const TrainConfig& cfg);

// Applies adam_update to every kernel's weights and bias. Throws
// numeric_error on non-finite gradients.
void adam_step(Parameters& params, const ParamGrads& grads, AdamState& state,
               long long t, const TrainConfig& cfg);

struct LossPoint {
  long long step = 0;
  double train_loss = 0.0;
  double val_loss = std::numeric_limits<double>::quiet_NaN();  // epoch ends
};

struct TrainResult {
  Parameters params;
  std::vector<LossPoint> history;
  bool diverged = false;
  std::string diagnostic;
  int epochs_run = 0;
};

// Normalizes the input by the model's recorded global constant and runs the
// network.
Tensor3 apply_model(const LayerPlan& plan, const Parameters& params,
                    const Tensor3& input);

// Full training loop: He initialization, per-epoch record shuffling, batch
// gradient averaging, Adam updates, per-epoch validation loss on the dataset
// tail and optional checkpoints. Deterministic for a fixed seed; within-batch
// parallelism reduces gradients in record order so the result is independent
// of the thread count. On divergence the last epoch-end parameters are
// returned with diverged = true.
TrainResult train(const NetworkSpec& spec,
                  const std::vector<TrainRecord>& records,
                  const TrainConfig& cfg);

// Plain-text loss table: "step train_loss val_loss" rows, one per batch,
// validation column filled on epoch boundaries and "-" elsewhere.
void write_loss_table(const std::string& path,
                      const std::vector<LossPoint>& history);

struct LayerGradError {
  std::string name;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  bool pass = false;
  double tolerance = 0.0;
  double max_rel_error = 0.0;
  std::vector<LayerGradError> layers;
};

// Compares the full analytic gradient of the MSE training loss against
// central finite differences (step 1e-5) for a small network on a 16x16
// input. Seeds are retried deterministically until every rectifier input is
// clear of the finite-difference step, so the check is free of kink noise.
GradCheckReport grad_check(const NetworkSpec& spec, double tolerance = 1e-5,
                           uint64_t seed = 1);

}  // namespace tomonet
