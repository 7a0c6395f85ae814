#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "test_util.hpp"
#include "tomonet/dataset.hpp"
#include "tomonet/metrics.hpp"
#include "tomonet/training.hpp"

using namespace tomonet;
using namespace testutil;

namespace {

NetworkSpec tiny_spec() {
  NetworkSpec s;
  s.base_channels = 4;
  s.n_scales = 1;
  s.blocks_per_scale = 1;
  return s;
}

}  // namespace

TEST_CASE("mse_loss definition and gradient") {
  Rng rng(61);
  Tensor3 t(6, 6, 1);
  fill_uniform(t, rng, 0.0, 1.0);
  MseResult same = mse_loss(t, t);
  CHECK(same.loss == 0.0);
  for (double v : same.grad.data()) CHECK(v == 0.0);

  Tensor3 shifted = t;
  for (double& v : shifted.data()) v += 0.25;
  CHECK(mse_loss(shifted, t).loss == doctest::Approx(0.0625).epsilon(1e-12));

  // gradient vs finite differences of the scalar loss
  Tensor3 pred(5, 5, 1), target(5, 5, 1);
  fill_uniform(pred, rng);
  fill_uniform(target, rng);
  MseResult r = mse_loss(pred, target);
  const double h = 1e-4;  // the loss is quadratic: no truncation error
  for (size_t i = 0; i < pred.size(); i += 3) {
    double saved = pred.data()[i];
    pred.data()[i] = saved + h;
    double lp = mse_loss(pred, target).loss;
    pred.data()[i] = saved - h;
    double lm = mse_loss(pred, target).loss;
    pred.data()[i] = saved;
    CHECK(rel_err(r.grad.data()[i], (lp - lm) / (2 * h), 1e-9) < 1e-8);
  }

  CHECK_THROWS_AS(mse_loss(Tensor3(2, 2, 1), Tensor3(2, 3, 1)),
                  contract_error);
}

TEST_CASE("adam single-step hand value") {
  TrainConfig cfg;  // paper defaults
  std::vector<double> theta{1.0}, m{0.0}, v{0.0};
  adam_update(theta, {0.5}, m, v, 1, cfg);
  // -lr * g / (|g| + eps) with both bias corrections cancelling at t=1
  CHECK(theta[0] - 1.0 ==
        doctest::Approx(-0.000999999980).epsilon(1e-9));
}

TEST_CASE("adam zero gradient leaves parameters unchanged") {
  TrainConfig cfg;
  std::vector<double> theta{0.3, -0.7}, m(2, 0.0), v(2, 0.0);
  adam_update(theta, {0.0, 0.0}, m, v, 1, cfg);
  CHECK(theta == std::vector<double>{0.3, -0.7});
}

TEST_CASE("adam steady steps and step-size bound") {
  TrainConfig cfg;
  std::vector<double> theta{0.0}, m{0.0}, v{0.0};
  adam_update(theta, {0.37}, m, v, 1, cfg);
  double step1 = std::fabs(theta[0]);
  double before = theta[0];
  adam_update(theta, {0.37}, m, v, 2, cfg);
  double step2 = std::fabs(theta[0] - before);
  CHECK(std::fabs(step2 - step1) / step1 < 0.01);

  // first-step magnitude is at most lr for every parameter
  Rng rng(62);
  std::vector<double> g(64), th(64, 0.0), mm(64, 0.0), vv(64, 0.0);
  for (double& x : g) x = rng.uniform(-3.0, 3.0);
  adam_update(th, g, mm, vv, 1, cfg);
  for (double x : th) CHECK(std::fabs(x) <= cfg.learning_rate * (1.0 + 1e-6));
}

TEST_CASE("adam rejects non-finite gradients") {
  TrainConfig cfg;
  std::vector<double> theta{0.0}, m{0.0}, v{0.0};
  CHECK_THROWS_AS(
      adam_update(theta, {std::numeric_limits<double>::quiet_NaN()}, m, v, 1,
                  cfg),
      numeric_error);
}

TEST_CASE("grad_check passes for the tiny spec and a zero network") {
  GradCheckReport report = grad_check(tiny_spec(), 1e-5, 1);
  CHECK(report.pass);
  CHECK(report.max_rel_error < 1e-5);
  CHECK(report.layers.size() == build(tiny_spec()).kernels.size());

  NetworkSpec zero_act = tiny_spec();
  zero_act.activation = Activation::None;  // linear net, exact up to rounding
  GradCheckReport linear = grad_check(zero_act, 1e-5, 2);
  CHECK(linear.pass);
}

TEST_CASE("a sign flip in the analytic gradient is caught") {
  NetworkSpec spec = tiny_spec();
  LayerPlan plan = build(spec);
  Parameters params = init_he(plan, 5);
  Rng rng(63);
  Tensor3 input(16, 16, 1), target(16, 16, 1);
  fill_uniform_no_zero(input, rng);
  fill_uniform(target, rng, 0.0, 1.0);

  std::vector<Tensor3> cache = forward_cached(plan, params, input);
  MseResult mse_r = mse_loss(cache.back(), target);
  ParamGrads grads = backward(plan, params, cache, mse_r.grad);

  // find a healthy-sized weight gradient in the first block conv
  size_t kernel = 1, index = 0;
  double best = 0.0;
  for (size_t i = 0; i < grads.weights[kernel].size(); ++i)
    if (std::fabs(grads.weights[kernel][i]) > best) {
      best = std::fabs(grads.weights[kernel][i]);
      index = i;
    }
  REQUIRE(best > 1e-8);

  const double h = 1e-5;
  double saved = params.kernels[kernel].weights[index];
  params.kernels[kernel].weights[index] = saved + h;
  double lp = mse_loss(forward(plan, params, input), target).loss;
  params.kernels[kernel].weights[index] = saved - h;
  double lm = mse_loss(forward(plan, params, input), target).loss;
  params.kernels[kernel].weights[index] = saved;
  double fd = (lp - lm) / (2 * h);

  double a = grads.weights[kernel][index];
  CHECK(rel_err(a, fd) < 1e-6);       // correct gradient agrees
  CHECK(rel_err(-a, fd) > 1e-3);      // corrupted gradient is flagged
}

TEST_CASE("lr = 0 leaves parameters bitwise unchanged") {
  SimConfig sim;
  sim.size = 32;
  sim.n_angles = 48;
  sim.seed = 21;
  auto records = make_dataset(4, sim);

  NetworkSpec spec = tiny_spec();
  TrainConfig cfg;
  cfg.learning_rate = 0.0;
  cfg.batch_size = 2;
  cfg.epochs = 3;
  cfg.seed = 9;
  TrainResult r = train(spec, records, cfg);

  Parameters fresh = init_he(build(spec), cfg.seed);
  REQUIRE(r.params.kernels.size() == fresh.kernels.size());
  for (size_t k = 0; k < fresh.kernels.size(); ++k) {
    CHECK(r.params.kernels[k].weights == fresh.kernels[k].weights);
    CHECK(r.params.kernels[k].bias == fresh.kernels[k].bias);
  }
}

TEST_CASE("training is deterministic for a fixed seed") {
  SimConfig sim;
  sim.size = 32;
  sim.n_angles = 48;
  sim.seed = 22;
  auto records = make_dataset(6, sim);

  NetworkSpec spec = tiny_spec();
  TrainConfig cfg;
  cfg.batch_size = 2;
  cfg.epochs = 2;
  cfg.seed = 4;
  TrainResult a = train(spec, records, cfg);
  TrainResult b = train(spec, records, cfg);
  REQUIRE(a.history.size() == b.history.size());
  for (size_t i = 0; i < a.history.size(); ++i)
    CHECK(a.history[i].train_loss == b.history[i].train_loss);
  for (size_t k = 0; k < a.params.kernels.size(); ++k)
    CHECK(a.params.kernels[k].weights == b.params.kernels[k].weights);
  CHECK(a.params.input_scale == b.params.input_scale);
}

TEST_CASE("one record can be memorized") {
  SimConfig sim;
  sim.size = 32;
  sim.n_angles = 48;
  sim.counts = 1e5;
  sim.mix = "0:1:0";
  sim.seed = 3;
  auto records = make_dataset(1, sim);

  TrainConfig cfg;
  cfg.batch_size = 1;
  cfg.epochs = 200;  // one step per epoch
  cfg.seed = 1;

  TrainResult r = train(tiny_spec(), records, cfg);
  REQUIRE(r.history.size() == 200);
  CHECK(!r.diverged);
  CHECK(r.history.back().train_loss < 0.1 * r.history.front().train_loss);
}

TEST_CASE("training reduces validation loss across seeds") {
  SimConfig sim;
  sim.size = 32;
  sim.n_angles = 48;
  sim.counts = 3e4;
  sim.mix = "1:2:1";
  sim.seed = 10;
  auto records = make_dataset(32, sim);

  LayerPlan plan = build(tiny_spec());
  int improved = 0;
  for (uint64_t seed = 1; seed <= 5; ++seed) {
    TrainConfig cfg;
    cfg.batch_size = 4;
    cfg.epochs = 4;
    cfg.seed = seed;
    cfg.validation_fraction = 0.25;
    size_t n_val = 8, n_train = records.size() - n_val;

    Parameters untrained = init_he(plan, seed);
    untrained.input_scale = 1.0;
    double norm = 0.0;
    for (const auto& rec : records)
      for (double v : rec.input.data()) norm += std::fabs(v);
    untrained.input_scale =
        norm / (records.size() * records[0].input.size());

    double before = 0.0, after = 0.0;
    TrainResult r = train(tiny_spec(), records, cfg);
    for (size_t i = n_train; i < records.size(); ++i) {
      before += mse(apply_model(plan, untrained, records[i].input),
                    records[i].target);
      after += mse(apply_model(plan, r.params, records[i].input),
                   records[i].target);
    }
    if (after < before) ++improved;
  }
  CHECK(improved == 5);
}

TEST_CASE("training aborts to the last checkpoint on divergence") {
  SimConfig sim;
  sim.size = 32;
  sim.n_angles = 48;
  sim.seed = 30;
  auto records = make_dataset(4, sim);

  TrainConfig cfg;
  cfg.learning_rate = 1e9;  // blows the parameters up immediately
  cfg.batch_size = 2;
  cfg.epochs = 5;
  cfg.seed = 2;
  TrainResult r = train(tiny_spec(), records, cfg);
  CHECK(r.diverged);
  CHECK(!r.diagnostic.empty());
  // returned parameters are the init (no epoch completed cleanly)
  for (const ConvKernel& k : r.params.kernels)
    for (double w : k.weights) CHECK(std::isfinite(w));
}

TEST_CASE("train rejects bad configs and empty datasets") {
  TrainConfig cfg;
  cfg.validation_fraction = 0.7;
  CHECK_THROWS_AS(cfg.validate(), config_error);
  TrainConfig ok;
  std::vector<TrainRecord> empty;
  CHECK_THROWS_AS(train(tiny_spec(), empty, ok), data_error);
}

TEST_CASE("loss table format") {
  std::vector<LossPoint> history{{1, 0.5}, {2, 0.25, 0.3}};
  write_loss_table("loss_table.txt", history);
  std::ifstream in("loss_table.txt");
  std::string line;
  std::getline(in, line);
  CHECK(line == "# step train_loss val_loss");
  std::getline(in, line);
  CHECK(line == "1 0.5 -");
  std::getline(in, line);
  CHECK(line == "2 0.25 0.29999999999999999");
}
