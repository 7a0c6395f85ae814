// Dev scratch: forward-pass timing, multiple samples for noise.
#include <cstdio>
#include <cstdlib>

#include "tomonet/dataset.hpp"
#include "tomonet/metrics.hpp"
#include "tomonet/osem.hpp"
#include "tomonet/threads.hpp"
#include "tomonet/training.hpp"

using namespace tomonet;

int main(int argc, char** argv) {
  int C = argc > 1 ? std::atoi(argv[1]) : 4;
  set_thread_count(1);

  SimConfig sim;
  sim.size = 64;
  sim.seed = 2024;
  TrainRecord rec = make_record(sim, 1);

  NetworkSpec spec;
  spec.base_channels = C;
  spec.n_scales = 2;
  spec.blocks_per_scale = 1;
  LayerPlan plan = build(spec);
  Parameters params = init_he(plan, 1);
  params.input_scale = 0.1;
  Float32Model f32 = compile_f32(plan, params);

  OsemConfig ocfg;
  for (int round = 0; round < 3; ++round) {
    double t64 = median_ms([&] { Tensor3 o = apply_model(plan, params, rec.input); }, 30, 3);
    double t32 = median_ms([&] { Tensor3 o = forward_f32(f32, rec.input); }, 30, 3);
    double tos = median_ms([&] { OsemResult o = osem_reconstruct(rec.sinogram, 64, ocfg); }, 10, 2);
    std::printf("C=%d round %d: f64 %.2f ms, f32 %.2f ms, osem %.2f ms -> "
                "ratio32 %.2f\n",
                C, round, t64, t32, tos, tos / t32);
  }
  return 0;
}
