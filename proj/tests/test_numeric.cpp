#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "levytree/errors.hpp"
#include "levytree/numeric.hpp"

using namespace levytree;

TEST_CASE("brent finds bracketed roots") {
  auto f = [](double x) { return x * x * x - 2.0 * x - 5.0; };
  double r = brent(f, 2.0, 3.0);
  CHECK(std::fabs(f(r)) < 1e-12);
  CHECK(brent([](double x) { return std::cos(x); }, 1.0, 2.0) == doctest::Approx(M_PI_2));
  CHECK_THROWS_AS(brent([](double x) { return x * x + 1.0; }, -1.0, 1.0), NoRootError);
}

TEST_CASE("grow_bracket expands to a sign change") {
  auto f = [](double x) { return x - 100.0; };
  auto [lo, hi] = grow_bracket(f, 0.0, 1.0);
  CHECK(f(lo) * f(hi) <= 0.0);
}

TEST_CASE("adaptive Simpson on smooth integrands") {
  double v = integrate_adaptive([](double x) { return std::exp(-x * x); }, 0.0, 10.0, 1e-12);
  CHECK(v == doctest::Approx(std::sqrt(M_PI) / 2.0).epsilon(1e-11));
  CHECK(integrate_adaptive([](double x) { return std::sin(x); }, 0.0, M_PI, 1e-12) ==
        doctest::Approx(2.0).epsilon(1e-11));
}

TEST_CASE("tanh-sinh handles endpoint singularities") {
  // int_0^1 x^{-1/2} dx = 2
  double v = integrate_tanh_sinh([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, 1e-12);
  CHECK(v == doctest::Approx(2.0).epsilon(1e-10));
  // int_0^1 log(x) dx = -1
  CHECK(integrate_tanh_sinh([](double x) { return std::log(x); }, 0.0, 1.0, 1e-12) ==
        doctest::Approx(-1.0).epsilon(1e-10));
}

TEST_CASE("ode_solve integrates a Riccati flow with dense output") {
  // y' = -y^2, y(0) = 1 -> y(t) = 1/(1+t)
  OdeSolution sol = ode_solve(
      [](double, const std::vector<double>& y, std::vector<double>& dy) { dy[0] = -y[0] * y[0]; },
      0.0, 3.0, {1.0}, 1e-12, 1e-14, nullptr, 3.0 / 512.0);
  for (double t : {0.0, 0.37, 1.0, 2.5, 3.0})
    CHECK(sol.eval(t, 0) == doctest::Approx(1.0 / (1.0 + t)).epsilon(1e-9));
}

TEST_CASE("ode_solve stop predicate ends blow-up integration") {
  // y' = y^2 blows up at t = 1
  OdeSolution sol = ode_solve(
      [](double, const std::vector<double>& y, std::vector<double>& dy) { dy[0] = y[0] * y[0]; },
      0.0, 2.0, {1.0}, 1e-10, 1e-12,
      [](double, const std::vector<double>& y) { return y[0] > 1e9; });
  CHECK(sol.t_back() < 1.0);
  CHECK(sol.knots().back().y[0] > 1e9);
}

TEST_CASE("gamma_q against known values") {
  CHECK(gamma_q(1.0, 2.0) == doctest::Approx(std::exp(-2.0)).epsilon(1e-12));
  // Q(1/2, x) = erfc(sqrt(x))
  CHECK(gamma_q(0.5, 1.3) == doctest::Approx(std::erfc(std::sqrt(1.3))).epsilon(1e-12));
  CHECK(gamma_q(3.0, 0.0) == doctest::Approx(1.0));
}

TEST_CASE("chi2_sf sanity") {
  // k=2: sf(x) = exp(-x/2)
  CHECK(chi2_sf(3.0, 2) == doctest::Approx(std::exp(-1.5)).epsilon(1e-12));
  CHECK(chi2_sf(0.0, 5) == doctest::Approx(1.0));
}

TEST_CASE("kolmogorov_sf limits") {
  CHECK(kolmogorov_sf(0.0) == doctest::Approx(1.0));
  CHECK(kolmogorov_sf(1.36) == doctest::Approx(0.0505).epsilon(0.01));  // 5% critical point
  CHECK(kolmogorov_sf(10.0) < 1e-10);
}
