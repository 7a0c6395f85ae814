// Dev-time oracle scratch runs; not a registered test.
#include <cstdio>

#include "tomonet/dataset.hpp"
#include "tomonet/metrics.hpp"
#include "tomonet/osem.hpp"
#include "tomonet/phantom.hpp"
#include "tomonet/radon.hpp"
#include "tomonet/rng.hpp"
#include "tomonet/threads.hpp"

using namespace tomonet;

int main() {
  set_thread_count(4);

  // FBP quality, noiseless Shepp-Logan, N=128, 180 angles.
  Phantom sl = make_phantom(PhantomKind::SheppLogan, 128, 0);
  Sinogram sino = radon(sl.image, 180, default_n_bins(128));
  Tensor3 rec = fbp(sino, 128);
  std::printf("noiseless FBP PSNR (N=128, 180 angles): %.3f dB\n",
              psnr(rec, sl.image));

  Tensor3 rec30 = fbp(radon(sl.image, 30, default_n_bins(128)), 128);
  std::printf("noiseless FBP PSNR (N=128, 30 angles):  %.3f dB\n",
              psnr(rec30, sl.image));

  // Mass conservation on a random image.
  Rng rng(5);
  Tensor3 img(64, 64, 1);
  for (double& v : img.data()) v = rng.uniform(0.0, 1.0);
  Sinogram s2 = radon(img, 45, default_n_bins(64));
  double img_sum = 0.0;
  for (double v : img.data()) img_sum += v;
  double worst = 0.0;
  for (int a = 0; a < s2.n_angles; ++a) {
    double row = 0.0;
    for (int b = 0; b < s2.n_bins; ++b) row += s2.at(a, b);
    worst = std::max(worst, std::fabs(row - img_sum) / img_sum);
  }
  std::printf("radon mass conservation worst rel err: %.3e\n", worst);

  // Adjoint test.
  double worst_adj = 0.0;
  for (int t = 0; t < 5; ++t) {
    Tensor3 u(48, 48, 1);
    for (double& v : u.data()) v = rng.uniform(-1.0, 1.0);
    Sinogram probe(40, default_n_bins(48));
    probe.angles = make_angles(40);
    for (double& v : probe.data) v = rng.uniform(-1.0, 1.0);
    Sinogram au = radon_at_angles(u, probe.angles, probe.n_bins);
    double lhs = 0.0;
    for (size_t i = 0; i < au.data.size(); ++i) lhs += au.data[i] * probe.data[i];
    lhs *= M_PI / probe.n_angles;
    Tensor3 atp = back_project(probe, 48);
    double rhs = 0.0;
    for (size_t i = 0; i < atp.size(); ++i) rhs += atp.data()[i] * u.data()[i];
    worst_adj = std::max(worst_adj, std::fabs(lhs - rhs) / std::fabs(rhs));
  }
  std::printf("radon/back_project adjoint worst rel err: %.3e\n", worst_adj);

  // Ramp filter DC + constant response.
  std::vector<double> constant(101, 2.5);
  std::vector<double> filtered = ramp_filter_line(constant);
  double dc = 0.0;
  for (double v : filtered) dc += v;
  double central_max = 0.0;
  for (int i = 25; i < 75; ++i) central_max = std::max(central_max, std::fabs(filtered[i]));
  std::printf("ramp DC of padded output: %.3e; central-half max: %.3e\n", dc,
              central_max);

  // FBP with noise.
  Sinogram noisy = poisson_sample(sino, 1e5, 7);
  double tot = 0.0;
  for (double v : sino.data) tot += v;
  for (double& v : noisy.data) v *= tot / 1e5;
  Tensor3 rec_noisy = fbp(noisy, 128);
  std::printf("FBP PSNR at 1e5 counts: %.3f dB\n", psnr(rec_noisy, sl.image));

  // OSEM on the same noisy data.
  OsemConfig ocfg;
  ocfg.n_subsets = 4;  // 180 % 8 != 0
  ocfg.n_iterations = 10;
  OsemResult osem = osem_reconstruct(noisy, 128, ocfg);
  std::printf("OSEM(4x10) PSNR at 1e5 counts: %.3f dB\n",
              psnr(osem.image, sl.image));

  // MLEM fixed point + monotonicity quick look.
  Tensor3 x0(48, 48, 1);
  for (double& v : x0.data()) v = 0.5 + rng.uniform(0.0, 1.0);
  Sinogram y0 = radon(x0, 40, default_n_bins(48));
  OsemConfig mlem{1, 1, 1e-10, 0.0};
  OsemResult fixed = osem_reconstruct(y0, 48, mlem);
  // fixed point check needs x0 as the initial image; quick manual iteration:
  double max_rel = 0.0;
  {
    Sinogram ones = y0;
    for (double& v : ones.data) v = 1.0;
    Tensor3 sens = back_project_rows(ones, 48, {});
    Sinogram fwd = radon_at_angles(x0, y0.angles, y0.n_bins);
    Sinogram ratio = fwd;
    for (size_t i = 0; i < ratio.data.size(); ++i)
      ratio.data[i] = y0.data[i] / (fwd.data[i] + 1e-10);
    Tensor3 upd = back_project_rows(ratio, 48, {});
    for (size_t i = 0; i < x0.size(); ++i) {
      double xn = sens.data()[i] > 0 ? x0.data()[i] * upd.data()[i] / sens.data()[i] : 0.0;
      max_rel = std::max(max_rel, std::fabs(xn - x0.data()[i]) /
                                      std::max(1e-12, std::fabs(x0.data()[i])));
    }
  }
  std::printf("MLEM fixed-point max rel move: %.3e\n", max_rel);

  // Poisson moments.
  Sinogram flat(100, 100);
  flat.angles = make_angles(100);
  for (double& v : flat.data) v = 1.0;
  Sinogram counts = poisson_sample(flat, 1e6, 11);
  double mean = 0.0;
  for (double v : counts.data) mean += v;
  mean /= counts.data.size();
  double var = 0.0;
  for (double v : counts.data) var += (v - mean) * (v - mean);
  var /= (counts.data.size() - 1);
  std::printf("poisson: per-bin mean %.4f (want 100), var %.4f\n", mean, var);

  // make_record noise-level ordering.
  SimConfig cfg;
  cfg.size = 64;
  cfg.counts = 1e4;
  TrainRecord low = make_record(cfg, 1);
  cfg.counts = 1e8;
  TrainRecord high = make_record(cfg, 1);
  std::printf("record MSE 1e4 counts: %.5e, 1e8 counts: %.5e\n",
              mse(low.input, low.target), mse(high.input, high.target));
  std::printf("record MSE 1e6 counts: ");
  cfg.counts = 1e6;
  TrainRecord mid = make_record(cfg, 1);
  std::printf("%.5e ; input PSNR %.2f dB\n", mse(mid.input, mid.target),
              psnr(mid.input, mid.target));
  return 0;
}
