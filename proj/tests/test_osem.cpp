#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "test_util.hpp"
#include "tomonet/metrics.hpp"
#include "tomonet/osem.hpp"
#include "tomonet/phantom.hpp"
#include "tomonet/threads.hpp"

using namespace tomonet;
using namespace testutil;

namespace {

Sinogram scaled_poisson(const Sinogram& clean, double counts, uint64_t seed) {
  double total = 0.0;
  for (double v : clean.data) total += v;
  Sinogram noisy = poisson_sample(clean, counts, seed);
  for (double& v : noisy.data) v *= total / counts;
  return noisy;
}

}  // namespace

TEST_CASE("consistent data with a positive image is an EM fixed point") {
  Rng rng(41);
  Tensor3 x0(48, 48, 1);
  for (double& v : x0.data()) v = 0.5 + rng.uniform(0.0, 1.0);
  Sinogram y = radon(x0, 40, default_n_bins(48));

  OsemConfig cfg;
  cfg.n_subsets = 1;
  cfg.n_iterations = 1;
  Tensor3 x1 = osem_reconstruct(y, 48, cfg, &x0).image;
  for (size_t i = 0; i < x0.size(); ++i)
    CHECK(rel_err(x1.data()[i], x0.data()[i]) < 1e-8);
}

TEST_CASE("MLEM log-likelihood is non-decreasing on Poisson data") {
  Phantom p = make_phantom(PhantomKind::Ellipses, 48, 3);
  Sinogram clean = radon(p.image, 40, default_n_bins(48));
  Sinogram y = poisson_sample(clean, 2e5, 9);

  OsemConfig cfg;
  cfg.n_subsets = 1;
  double prev = -std::numeric_limits<double>::infinity();
  for (int k = 1; k <= 20; ++k) {
    cfg.n_iterations = k;
    Tensor3 xk = osem_reconstruct(y, 48, cfg).image;
    for (double v : xk.data()) CHECK(v >= 0.0);
    double ll = poisson_loglik(y, xk);
    CHECK(ll >= prev - 1e-9);
    prev = ll;
  }
}

TEST_CASE("MLEM projected counts converge to the data total") {
  Phantom p = make_phantom(PhantomKind::HotSpots, 48, 11);
  Sinogram clean = radon(p.image, 40, default_n_bins(48));
  Sinogram y = poisson_sample(clean, 1e5, 13);

  OsemConfig cfg;
  cfg.n_subsets = 1;
  cfg.n_iterations = 50;
  Tensor3 x = osem_reconstruct(y, 48, cfg).image;
  Sinogram fwd = radon_at_angles(x, y.angles, y.n_bins);
  double sy = 0.0, sf = 0.0;
  for (double v : y.data) sy += v;
  for (double v : fwd.data) sf += v;
  CHECK(std::fabs(sf - sy) / sy < 0.01);
}

TEST_CASE("all-zero sinogram reconstructs to zero with a warning") {
  Sinogram zero(16, 48);
  zero.angles = make_angles(16);
  OsemConfig cfg;
  cfg.n_subsets = 4;
  OsemResult r = osem_reconstruct(zero, 32, cfg);
  CHECK(r.zero_data);
  for (double v : r.image.data()) CHECK(v == 0.0);
}

TEST_CASE("OSEM on clean data beats FBP on low-count data") {
  Phantom sl = make_phantom(PhantomKind::SheppLogan, 96, 0);
  Sinogram clean = radon(sl.image, 96, default_n_bins(96));

  OsemConfig cfg;  // 8 subsets x 10 iterations
  Tensor3 osem_rec = osem_reconstruct(clean, 96, cfg).image;

  Sinogram noisy = scaled_poisson(clean, 1e5, 21);
  Tensor3 fbp_rec = fbp(noisy, 96);
  CHECK(psnr(osem_rec, sl.image) >= psnr(fbp_rec, sl.image));
}

TEST_CASE("osem validates its configuration") {
  Sinogram y(16, 48);
  y.angles = make_angles(16);
  y.at(0, 10) = 1.0;
  OsemConfig bad;
  bad.n_subsets = 5;  // does not divide 16
  CHECK_THROWS_AS(osem_reconstruct(y, 32, bad), config_error);
  bad.n_subsets = 4;
  bad.epsilon = 0.0;
  CHECK_THROWS_AS(osem_reconstruct(y, 32, bad), config_error);
  bad.epsilon = 1.0;  // above the allowed guard range
  CHECK_THROWS_AS(osem_reconstruct(y, 32, bad), config_error);
}

TEST_CASE("optional Gaussian post-filter smooths the result") {
  Phantom p = make_phantom(PhantomKind::HotSpots, 48, 2);
  Sinogram y = radon(p.image, 40, default_n_bins(48));
  OsemConfig plain;
  plain.n_subsets = 4;
  plain.n_iterations = 5;
  OsemConfig smooth = plain;
  smooth.gauss_sigma = 1.5;
  Tensor3 a = osem_reconstruct(y, 48, plain).image;
  Tensor3 b = osem_reconstruct(y, 48, smooth).image;
  // smoothing conserves mass but strictly reduces the peak
  double sa = 0, sb = 0, pa = 0, pb = 0;
  for (double v : a.data()) {
    sa += v;
    pa = std::max(pa, v);
  }
  for (double v : b.data()) {
    sb += v;
    pb = std::max(pb, v);
  }
  CHECK(std::fabs(sa - sb) / sa < 0.01);
  CHECK(pb < pa);
}

TEST_CASE("poisson_loglik matches a direct summation oracle") {
  Phantom p = make_phantom(PhantomKind::Ellipses, 48, 5);
  Sinogram y = poisson_sample(radon(p.image, 30, default_n_bins(48)), 5e4, 3);

  double got = poisson_loglik(y, p.image);
  Sinogram yhat = radon(p.image, 30, default_n_bins(48));
  double want = 0.0;
  for (size_t i = 0; i < y.data.size(); ++i)
    want += y.data[i] * std::log(yhat.data[i] + 1e-10) - yhat.data[i];
  CHECK(rel_err(got, want) < 1e-10);

  // zero data, zero image
  Sinogram zero(8, 70);
  zero.angles = make_angles(8);
  CHECK(poisson_loglik(zero, Tensor3(48, 48, 1, 0.0)) == 0.0);

  Tensor3 bad(48, 48, 1, 0.0);
  bad.at(0, 0, 0) = -0.5;
  CHECK_THROWS_AS(poisson_loglik(zero, bad), contract_error);
}

TEST_CASE("poisson_loglik increases as the model approaches the data") {
  // single-bin instance: one center pixel projected at one angle
  Sinogram y(1, default_n_bins(33));
  y.angles = make_angles(1);
  y.at(0, (y.n_bins - 1) / 2) = 10.0;

  double prev = -std::numeric_limits<double>::infinity();
  for (double scale : {0.2, 0.5, 0.8, 1.0}) {
    Tensor3 img(33, 33, 1, 0.0);
    img.at(16, 16, 0) = 10.0 * scale;
    double ll = poisson_loglik(y, img);
    CHECK(ll > prev);
    prev = ll;
  }
}
