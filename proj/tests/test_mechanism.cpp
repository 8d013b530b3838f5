#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "levytree/errors.hpp"
#include "levytree/mechanism.hpp"
#include "levytree/numeric.hpp"
#include "oracles.hpp"

using namespace levytree;

namespace {

// e^{-x} - 1 + x without cancellation (oracle-side helper)
double em1c(double x) {
  if (std::fabs(x) > 1e-3) return std::expm1(-x) + x;
  double x2 = x * x;
  return x2 * (0.5 + x * (-1.0 / 6.0 + x * (1.0 / 24.0 + x * (-1.0 / 120.0))));
}

// Direct quadrature of the integral term of eq. psi (independent oracle for
// the closed-form stable evaluation).
double psi_by_quadrature(double alpha, double beta, double a, double c, double lambda) {
  auto integrand = [&](double r) {
    return (r < 1.0 ? em1c(lambda * r) : std::expm1(-lambda * r)) * c * std::pow(r, -1.0 - a);
  };
  double inner = integrate_tanh_sinh(integrand, 0.0, 1.0, 1e-13);
  // r = 1/s on (1, inf)
  double outer = integrate_tanh_sinh(
      [&](double s) {
        double r = 1.0 / s;
        return integrand(r) * r * r;
      },
      0.0, 1.0, 1e-13);
  return alpha * lambda + beta * lambda * lambda + inner + outer;
}

}  // namespace

TEST_CASE("eval: quadratic closed forms") {
  auto m = oracle::quadratic(0.0, 1.0);
  CHECK(m.eval(2.0, 0) == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(m.eval(3.0, 1) == doctest::Approx(6.0).epsilon(1e-14));
  CHECK(m.eval(5.0, 2) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("eval: stable calibrated to lambda^{3/2}") {
  auto m = oracle::stable_32();
  CHECK(m.eval(4.0, 0) == doctest::Approx(8.0).epsilon(1e-12));
  CHECK(m.eval(1.0, 0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(m.eval(4.0, 1) == doctest::Approx(3.0).epsilon(1e-12));  // 1.5 * 2
  // independent oracle: quadrature of the defining integral
  double a = 1.5, c = a * (a - 1.0) / std::tgamma(2.0 - a);
  for (double l : {0.5, 1.0, 4.0, 9.0})
    CHECK(m.eval(l, 0) ==
          doctest::Approx(psi_by_quadrature(c / (a - 1.0), 0.0, a, c, l)).epsilon(1e-10));
  CHECK(m.criticality() == BranchingMechanism::Criticality::critical);
}

TEST_CASE("eval: finite atoms") {
  BranchingMechanism m(0.5, 1.0, FiniteAtomsMeasure{{{0.5, 2.0}, {2.0, 1.0}}});
  double l = 1.7;
  double expect = 0.5 * l + l * l;
  expect += 2.0 * (std::exp(-l * 0.5) - 1.0 + l * 0.5);
  expect += 1.0 * (std::exp(-l * 2.0) - 1.0);
  CHECK(m.eval(l, 0) == doctest::Approx(expect).epsilon(1e-14));
}

TEST_CASE("eval: tabulated tracks its stable counterpart") {
  // a truncated grid has finite small-jump activity, so beta > 0 is required
  double a = 1.5, c = a * (a - 1.0) / std::tgamma(2.0 - a);
  double beta = 0.01;
  TabulatedMeasure tab;
  int n = 4000;
  for (int i = 0; i <= n; ++i) {
    double r = std::exp(-14.0 + 17.0 * i / n);  // ~8e-7 .. 2e1
    tab.r.push_back(r);
    tab.density.push_back(c * std::pow(r, -2.5));
  }
  tab.tail_index = a;
  tab.tail_scale = c;
  BranchingMechanism m(c / (a - 1.0), beta, tab);
  BranchingMechanism ref(c / (a - 1.0), beta, StableMeasure{a, c});
  for (double l : {0.5, 1.0, 2.0}) {
    CHECK(m.eval(l, 0) == doctest::Approx(ref.eval(l, 0)).epsilon(2e-3));
    CHECK(m.eval(l, 1) == doctest::Approx(ref.eval(l, 1)).epsilon(2e-3));
  }
  CHECK_THROWS_AS(BranchingMechanism(0.0, 0.0, tab), DomainError);
}

TEST_CASE("construction rejects invalid mechanisms") {
  CHECK_THROWS_AS(BranchingMechanism(0.0, -1.0, ZeroMeasure{}), DomainError);
  CHECK_THROWS_AS(BranchingMechanism(0.0, 0.0, ZeroMeasure{}), DomainError);  // Assumption 1
  CHECK_THROWS_AS(BranchingMechanism(0.0, 1.0, StableMeasure{2.5, 1.0}), DomainError);
  CHECK_THROWS_AS(BranchingMechanism(0.0, 1.0, StableMeasure{1.5, -1.0}), DomainError);
  // finite atoms need beta > 0 (Assumption 1)
  CHECK_THROWS_AS(BranchingMechanism(0.0, 0.0, FiniteAtomsMeasure{{{1.0, 1.0}}}), DomainError);
  CHECK_NOTHROW(BranchingMechanism(0.0, 0.5, FiniteAtomsMeasure{{{1.0, 1.0}}}));
  TabulatedMeasure bad;
  bad.r = {0.5, 2.0};
  bad.density = {1.0, 1.0};
  bad.tail_index = 0.5;  // conservativity gap
  bad.tail_scale = 1.0;
  CHECK_THROWS_AS(BranchingMechanism(0.0, 1.0, bad), DomainError);
}

TEST_CASE("shift identities") {
  auto m = oracle::quadratic(0.0, 1.0);
  auto m1 = m.shifted(1.0);
  CHECK(m1.eval(1.0, 0) == doctest::Approx(3.0).epsilon(1e-14));  // (1+1)^2 - 1
  auto m0 = m.shifted(0.0);
  for (double l : {0.1, 1.0, 7.0}) CHECK(m0.eval(l, 0) == doctest::Approx(m.eval(l, 0)));
  // semigroup on a grid
  auto s = oracle::stable_32();
  auto s12 = s.shifted(0.7).shifted(0.55);
  auto s_sum = s.shifted(1.25);
  for (double l : {0.2, 0.9, 3.1, 8.0}) {
    CHECK(s12.eval(l, 0) ==
          doctest::Approx(s_sum.eval(l, 0)).epsilon(1e-10));
    CHECK(s12.eval(l, 1) == doctest::Approx(s_sum.eval(l, 1)).epsilon(1e-10));
  }
  // shift law: eval(shift(m,t), l) = eval(m, l+t) - eval(m, t)
  for (double l : {0.3, 2.0})
    CHECK(m1.eval(l, 0) == doctest::Approx(m.eval(l + 1.0, 0) - m.eval(1.0, 0)).epsilon(1e-12));
  CHECK_THROWS_AS(s.shifted(-0.1), DomainError);  // window edge for stable
}

TEST_CASE("theta window") {
  auto q = oracle::quadratic(0.0, 1.0);
  CHECK(q.theta_window().theta_inf == -kInf);
  CHECK(q.member(-100.0));
  auto s = oracle::stable_32();
  CHECK(s.theta_window().theta_inf == 0.0);
  CHECK(s.member(0.0));
  CHECK_FALSE(s.member(-1e-9));
  // monotone: member(t) and t' > t implies member(t')
  auto s2 = s.shifted(2.0);
  CHECK(s2.theta_window().theta_inf == doctest::Approx(-2.0));
  CHECK(s2.member(-2.0));
  CHECK_FALSE(s2.member(-2.0 - 1e-9));
}

TEST_CASE("invert and theta_bar") {
  auto m = oracle::quadratic(0.0, 1.0);
  CHECK(m.theta_bar(-2.0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(*m.theta_star() == doctest::Approx(0.0));
  auto m3 = m.shifted(3.0);
  CHECK(m3.theta_bar(0.0) == doctest::Approx(0.0));  // subcritical: fixed point
  CHECK(m.theta_bar(3.0) == doctest::Approx(3.0));
  CHECK_THROWS_AS(m.invert(-1.0), NoRootError);
  // psi_q^{-1}(0) = q_bar - q for q < 0
  for (double q : {-0.3, -1.0, -2.5}) {
    auto mq = m.shifted(q);
    CHECK(mq.invert(0.0).psi_inverse == doctest::Approx(m.theta_bar(q) - q).epsilon(1e-10));
  }
  // supercritical stable: theta_star positive, conjugate above it
  auto sup = oracle::stable_32_supercritical(1.0);  // psi(l) = l^{3/2} - l
  CHECK(sup.criticality() == BranchingMechanism::Criticality::supercritical);
  double ts = *sup.theta_star();
  CHECK(ts == doctest::Approx(4.0 / 9.0).epsilon(1e-10));  // psi'(l) = 1.5 sqrt(l) - 1
  double tb = sup.theta_bar(0.1);
  CHECK(tb > ts);
  CHECK(sup.eval(tb, 0) == doctest::Approx(sup.eval(0.1, 0)).epsilon(1e-9));
}

TEST_CASE("cumulant closed forms and flow") {
  auto m = oracle::quadratic(0.0, 1.0);
  CHECK(m.cumulant(0.0, 0.7) == doctest::Approx(0.7));
  CHECK(m.cumulant(1.0, 1.0) == doctest::Approx(0.5).epsilon(1e-9));
  auto m1 = m.shifted(1.0);
  CHECK(m1.cumulant(std::log(2.0), 2.0) == doctest::Approx(2.0 / 7.0).epsilon(1e-9));
  // independent oracle: the defining integral equation int_u^l dr/psi = a
  double a_time = 0.8, lam = 2.5;
  double u = m1.cumulant(a_time, lam);
  double integral = integrate_adaptive([&](double r) { return 1.0 / m1.eval(r, 0); }, u, lam,
                                       1e-12);
  CHECK(integral == doctest::Approx(a_time).epsilon(1e-9));
  // flow property u(a+a', l) = u(a, u(a', l))
  for (double th : {0.0, 0.5}) {
    auto mt = m.shifted(th);
    for (double l : {0.5, 2.0})
      CHECK(mt.cumulant(0.9, l) ==
            doctest::Approx(mt.cumulant(0.4, mt.cumulant(0.5, l))).epsilon(1e-8));
  }
  CHECK_THROWS_AS(m.cumulant(-1.0, 1.0), DomainError);
}

TEST_CASE("extinction closed forms") {
  auto m = oracle::quadratic(0.0, 1.0);
  CHECK(m.extinction(2.0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(m.shifted(1.0).extinction(std::log(2.0)) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  auto s = oracle::stable_32();
  CHECK(s.extinction(2.0) == doctest::Approx(1.0).epsilon(1e-9));
  // b_h(t) = b(h - t)
  CHECK(m.extinction(2.0, 0.5) == doctest::Approx(m.extinction(1.5)).epsilon(1e-12));
  // level identity u(a, b(h-a)) = b(h)
  for (double th : {0.0, 1.0}) {
    auto mt = m.shifted(th);
    double h = 1.5, a = 0.6;
    CHECK(mt.cumulant(a, mt.extinction(h - a)) == doctest::Approx(mt.extinction(h)).epsilon(1e-8));
  }
  double h = 1.2, a = 0.5;
  CHECK(s.cumulant(a, s.extinction(h - a)) == doctest::Approx(s.extinction(h)).epsilon(1e-8));
}

TEST_CASE("conjugacy identities (quadratic, theta < 0)") {
  auto m = oracle::quadratic(0.0, 1.0);
  for (double th : {-0.25, -0.5, -1.0, -2.0}) {
    double tb = m.theta_bar(th);
    CHECK(tb == doctest::Approx(-th).epsilon(1e-12));
    for (double h : {0.5, 1.0, 2.0}) {
      double b_th = m.shifted(th).extinction(h);
      double b_tb = m.shifted(tb).extinction(h);
      CHECK(std::fabs(th + b_th - tb - b_tb) < 1e-8);
      double p1 = m.shifted(th).eval(b_th, 0);
      double p2 = m.shifted(tb).eval(b_tb, 0);
      CHECK(std::fabs(p1 - p2) < 1e-8);
      // oracle: closed-form b
      CHECK(b_th == doctest::Approx(oracle::quad_b(1.0, th, h)).epsilon(1e-8));
    }
  }
}

TEST_CASE("conjugacy identities (supercritical stable window)") {
  auto sup = oracle::stable_32_supercritical(1.0);
  double ts = *sup.theta_star();
  for (double th : {0.0, 0.2, 0.4 * ts / 0.4}) {
    if (th >= ts) continue;
    double tb = sup.theta_bar(th);
    for (double h : {0.5, 1.0}) {
      double b_th = sup.shifted(th).extinction(h);
      double b_tb = sup.shifted(tb).extinction(h);
      CHECK(std::fabs(th + b_th - tb - b_tb) < 1e-8);
      CHECK(std::fabs(sup.shifted(th).eval(b_th, 0) - sup.shifted(tb).eval(b_tb, 0)) < 1e-8);
    }
  }
}

TEST_CASE("gamma_theta") {
  auto m = oracle::quadratic(0.0, 1.0);
  CHECK(m.gamma_theta(0.7, 0.0) == doctest::Approx(0.0));
  for (double th : {-0.5, 0.0, 2.0})
    for (double l : {0.5, 1.0, 3.0})
      CHECK(m.gamma_theta(th, l) == doctest::Approx(2.0 * l).epsilon(1e-12));
  auto s = oracle::stable_32();
  // psi'(l) = 1.5 sqrt(l)
  CHECK(s.gamma_theta(1.0, 1.0) == doctest::Approx(1.5 * (std::sqrt(2.0) - 1.0)).epsilon(1e-10));
  CHECK(s.gamma_theta(1.0, 3.0) == doctest::Approx(1.5 * (2.0 - 1.0)).epsilon(1e-10));
  // non-negative and non-decreasing in lambda
  double prev = 0.0;
  for (double l = 0.0; l <= 5.0; l += 0.25) {
    double g = s.gamma_theta(0.5, l);
    CHECK(g >= prev - 1e-12);
    prev = g;
  }
}

TEST_CASE("dub derivative identity against finite differences") {
  auto m = oracle::quadratic(0.0, 1.0);
  for (double th : {0.0, 1.0}) {
    auto mt = m.shifted(th);
    double h = 1.2, a = 0.5;
    double b_ha = mt.extinction(h - a);
    double delta = 1e-6;
    double fd = (mt.cumulant(a, b_ha + delta) - mt.cumulant(a, b_ha - delta)) / (2.0 * delta);
    double analytic = mt.eval(mt.extinction(h), 0) / mt.eval(b_ha, 0);
    CHECK(fd == doctest::Approx(analytic).epsilon(1e-5));
  }
}

TEST_CASE("exit density: forms, closed form, window integral, tail") {
  auto m = oracle::quadratic(0.0, 1.0);
  ExitDensityForms f = exit_density_forms(m, 1.0, 1.0);
  CHECK(std::fabs(f.first_form - f.second_form) <= 1e-6 * std::fabs(f.first_form));
  CHECK(f.first_form == doctest::Approx(-oracle::quad_db_dtheta(1.0, 1.0, 1.0)).epsilon(1e-7));
  CHECK(f.first_form == doctest::Approx(0.41103).epsilon(1e-4));
  // finite differences of b^theta(h) in theta
  double d = 1e-5;
  double fd = -(m.shifted(1.0 + d).extinction(1.0) - m.shifted(1.0 - d).extinction(1.0)) /
              (2.0 * d);
  CHECK(exit_density(m, 1.0, 1.0) == doctest::Approx(fd).epsilon(1e-5));
  // stable-3/2 consistency of the two forms and the FD route
  auto s = oracle::stable_32();
  ExitDensityForms fs = exit_density_forms(s, 0.5, 1.0);
  CHECK(std::fabs(fs.first_form - fs.second_form) <= 1e-6 * std::fabs(fs.first_form));
  double fds = -(s.shifted(0.5 + d).extinction(1.0) - s.shifted(0.5 - d).extinction(1.0)) /
               (2.0 * d);
  CHECK(fs.first_form == doctest::Approx(fds).epsilon(1e-5));
  // window integral equals b^{t1}(h) - b^{t2}(h)
  double t1 = 0.5, t2 = 1.5, h = 1.0;
  double wind = integrate_adaptive([&](double th) { return exit_density(m, th, h); }, t1, t2,
                                   1e-8);
  CHECK(wind == doctest::Approx(m.shifted(t1).extinction(h) - m.shifted(t2).extinction(h))
                    .epsilon(1e-6));
  // density vanishes along theta -> inf (monotone tail)
  double prev = exit_density(m, 2.0, 1.0);
  for (double th : {4.0, 8.0, 16.0}) {
    double cur = exit_density(m, th, 1.0);
    CHECK(cur < prev);
    prev = cur;
  }
  CHECK(prev < 1e-10);
}

TEST_CASE("exit given ascension: closed forms and complementarity") {
  auto m = oracle::quadratic(0.0, 1.0);
  ExitGivenAscension e = exit_given_ascension(m, -1.0, -1.0 + 1e-9, 1.0);
  CHECK(e.p_eq == doctest::Approx(oracle::quad_p_eq(1.0, -1.0, 1.0)).epsilon(1e-8));
  CHECK(e.p_eq == doctest::Approx(0.58898).epsilon(2e-5));
  CHECK(e.p_geq == doctest::Approx(0.41102).epsilon(2e-4));
  CHECK(e.p_geq + e.p_eq == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(std::fabs(e.p_eq - e.p_eq_alt) < 1e-8);
  // against the hat-form closed expression at a separated theta
  ExitGivenAscension e2 = exit_given_ascension(m, -1.0, 0.5, 1.0);
  CHECK(e2.p_geq == doctest::Approx(oracle::quad_p_geq(1.0, -1.0, 0.5, 1.0)).epsilon(1e-8));
  // c = C(theta, h) of the remark; at theta = theta0 it matches p_eq
  CHECK(e.c == doctest::Approx(e.p_eq).epsilon(1e-6));
  // h -> infinity: N[A_h = A | A = theta0] -> 1
  double prev = 0.0;
  for (double h : {1.0, 3.0, 6.0, 10.0}) {
    double v = exit_given_ascension(m, -1.0, -1.0 + 1e-9, h).p_eq;
    CHECK(v > prev);
    prev = v;
  }
  CHECK(prev > 0.999);
  CHECK_THROWS_AS(exit_given_ascension(m, 0.5, 1.0, 1.0), DomainError);
}

TEST_CASE("spine density: normalization and spot value") {
  auto m = oracle::quadratic(0.0, 1.0);
  ExtinctionProfile prof(m, 1.0, 1.0);
  auto f = [&](double t) {
    const BranchingMechanism& mt = prof.shifted_mechanism();
    double b = prof.b(t);
    return (mt.eval(b, 1) - mt.eval(0.0, 1)) * std::exp(-prof.gamma_int(t));
  };
  double total = integrate_adaptive(f, 0.0, prof.t_cut(), 1e-9, 1e-12);
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
  // f(0) = 2 beta b^1(1) = 4 / (e^2 - 1)
  CHECK(spine_density(m, 1.0, 1.0, 0.0) ==
        doctest::Approx(4.0 / (std::exp(2.0) - 1.0)).epsilon(1e-9));
  // E[e^{-psi'(theta) xi}] finite for theta < 0
  double th = -0.5;
  ExtinctionProfile pneg(m, th, 1.0);
  double dpsi = m.eval(th, 1);
  auto fneg = [&](double t) {
    const BranchingMechanism& mt = pneg.shifted_mechanism();
    double b = pneg.b(t);
    return (mt.eval(b, 1) - mt.eval(0.0, 1)) * std::exp(-pneg.gamma_int(t)) *
           std::exp(-dpsi * t);
  };
  double weighted = integrate_adaptive(fneg, 0.0, pneg.t_cut(), 1e-8, 1e-12);
  CHECK(std::isfinite(weighted));
  CHECK(weighted > 0.0);
}

TEST_CASE("mechanism spec strings") {
  auto m = parse_mechanism("quadratic alpha=0.5 beta=2");
  CHECK(m.alpha() == doctest::Approx(0.5));
  CHECK(m.beta() == doctest::Approx(2.0));
  auto s = parse_mechanism(
      "stable alpha=0.84628437532163443 beta=0 index=1.5 scale=0.42314218766081721");
  CHECK(s.eval(4.0, 0) == doctest::Approx(8.0).epsilon(1e-10));
  auto f = parse_mechanism("atoms alpha=0 beta=1 atoms=0.5:2,2:1");
  CHECK(std::get<FiniteAtomsMeasure>(f.levy()).atoms.size() == 2);
  CHECK_THROWS_AS(parse_mechanism("quadratic alpha=0"), ConfigError);
  CHECK_THROWS_AS(parse_mechanism("mystery alpha=0 beta=1"), ConfigError);
  CHECK_THROWS_AS(parse_mechanism("atoms alpha=0 beta=1 atoms=oops"), ConfigError);
}
