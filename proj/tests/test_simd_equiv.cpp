#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "levytree/mechanism.hpp"
#include "levytree/sampler.hpp"
#include "levytree/simd/gauss.hpp"
#include "levytree/simd/vecmath.hpp"
#include "levytree/stats.hpp"

using namespace levytree;
using namespace levytree::simd;

TEST_CASE("vecmath log matches libm on the unit interval") {
  for (double u : {1e-16, 1e-9, 0.001, 0.1, 0.5, 0.70710678, 0.9999999, 1.0}) {
    double mine = log_unit<ScalarLane>(u);
    CHECK(mine == doctest::Approx(std::log(u)).epsilon(2e-14));
  }
}

TEST_CASE("vecmath sincos matches libm on [0,1)") {
  for (int i = 0; i < 1000; ++i) {
    double u = (i + 0.3) / 1000.0;
    double s, c;
    sincos_2pi<ScalarLane>(u, s, c);
    CHECK(s == doctest::Approx(std::sin(2.0 * M_PI * u)).epsilon(1e-12).scale(1.0));
    CHECK(c == doctest::Approx(std::cos(2.0 * M_PI * u)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("gaussian fill backends agree bit for bit") {
  if (!avx2_available()) {
    MESSAGE("avx2 not available; skipping the cross-backend check");
    return;
  }
  for (std::size_t npairs : {1u, 3u, 4u, 5u, 64u, 1001u}) {
    std::vector<double> a(2 * npairs), b(2 * npairs);
    set_gauss_backend(GaussBackend::scalar);
    gauss_fill_pairs(12345, 6, 17, npairs, a.data());
    set_gauss_backend(GaussBackend::avx2);
    gauss_fill_pairs(12345, 6, 17, npairs, b.data());
    set_gauss_backend(GaussBackend::auto_detect);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0);
  }
}

TEST_CASE("gauss stream chunking does not change the sequence") {
  std::vector<double> big;
  {
    GaussStream g(7, 9, 4096);
    for (int i = 0; i < 5000; ++i) big.push_back(g.next());
  }
  GaussStream h(7, 9, 64);
  for (int i = 0; i < 5000; ++i) CHECK(h.next() == big[i]);
}

TEST_CASE("gauss fill output is standard normal") {
  std::vector<double> xs(200000);
  gauss_fill_pairs(99, 3, 0, xs.size() / 2, xs.data());
  MeanSe ms = mean_se(xs);
  CHECK(std::fabs(ms.mean) < 4.0 * ms.se);
  CHECK(ms.variance == doctest::Approx(1.0).epsilon(0.02));
  KsResult ks = ks_test(xs, [](double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); });
  CHECK(ks.p_value > 0.001);
}

TEST_CASE("forest sampler is backend independent") {
  if (!avx2_available()) return;
  BranchingMechanism m(0.0, 1.0, ZeroMeasure{});
  auto run = [&](GaussBackend backend) {
    set_gauss_backend(backend);
    RngStream rng(2024, 5);
    ForestOptions fo;
    fo.height_cap = 2.0;
    ForestStats s = sample_forest_stats(m, 0.5, 1e-3, rng, fo);
    set_gauss_backend(GaussBackend::auto_detect);
    return s;
  };
  ForestStats a = run(GaussBackend::scalar);
  ForestStats b = run(GaussBackend::avx2);
  CHECK(a.sigma == b.sigma);
  CHECK(a.h_max == b.h_max);
  CHECK(a.excursions == b.excursions);
}
