#pragma once

#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "levytree/numeric.hpp"

namespace levytree {

// Levy measure Pi of a branching mechanism. Stable means
// Pi(dr) = scale * r^{-1-index} dr with index in (1,2).
struct ZeroMeasure {};

struct StableMeasure {
  double index;
  double scale;
};

struct FiniteAtomsMeasure {
  std::vector<std::pair<double, double>> atoms;  // (r_k > 0, w_k > 0)
};

struct TabulatedMeasure {
  std::vector<double> r;        // strictly increasing, r.front() > 0, r.back() >= 1
  std::vector<double> density;  // Pi density sampled at r
  double tail_index = 0.0;      // beyond r.back(): tail_scale * r^{-1-tail_index}
  double tail_scale = 0.0;
};

using LevyMeasureSpec =
    std::variant<ZeroMeasure, StableMeasure, FiniteAtomsMeasure, TabulatedMeasure>;

struct ThetaWindow {
  double theta_inf;  // lower end of the shift window
  bool closed;       // whether theta_inf itself is admissible
  bool member(double theta) const {
    return closed ? theta >= theta_inf : theta > theta_inf;
  }
};

// psi(lambda) = alpha lambda + beta lambda^2
//             + int (e^{-lambda r} - 1 + lambda r 1{r<1}) Pi(dr),
// possibly shifted: a mechanism carries an accumulated shift s and evaluates
// psi_s(lambda) = psi(lambda + s) - psi(s). Construction enforces the
// integrability, conservativity and Grey conditions; invalid parameter sets
// throw DomainError.
class BranchingMechanism {
 public:
  BranchingMechanism(double alpha, double beta, LevyMeasureSpec levy);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  const LevyMeasureSpec& levy() const { return levy_; }
  double shift_total() const { return shift_; }
  bool is_quadratic() const { return std::holds_alternative<ZeroMeasure>(levy_); }

  // psi, psi', psi'' of the (shifted) mechanism.
  double eval(double lambda, int order = 0) const;
  double psi(double lambda) const { return eval(lambda, 0); }
  double psi_prime(double lambda) const { return eval(lambda, 1); }

  BranchingMechanism shifted(double theta) const;

  ThetaWindow theta_window() const;
  bool member(double theta) const { return theta_window().member(theta); }

  enum class Criticality { subcritical, critical, supercritical };
  Criticality criticality() const;

  // Unique positive root of psi' (0 when critical); nullopt when subcritical.
  std::optional<double> theta_star() const;

  struct InvertResult {
    double psi_inverse;
    std::optional<double> theta_star;
  };
  // Largest root of psi(q) = v; NoRootError if v is below the range.
  InvertResult invert(double v) const;
  // theta_bar = psi^{-1}(psi(theta)); equals theta when psi_theta is (sub)critical.
  double theta_bar(double theta) const;

  // u(a, lambda): du/da = -psi(u), u(0) = lambda.
  double cumulant(double a, double lambda) const;

  // b_h(t) = b(h - t) with int_{b(h)}^infty dr/psi(r) = h.
  double extinction(double h, double t = 0.0) const;

  // int_b^infty dr / psi(r)^k for k = 1, 2 (b above the largest root of psi).
  double tail_integral(double b, int k = 1) const;

  // gamma_theta(lambda) = psi'(lambda + theta) - psi'(theta).
  double gamma_theta(double theta, double lambda) const;

 private:
  double base_eval(double lambda, int order) const;
  void validate() const;
  double argmin_theta() const;  // root of psi' on the window (may be negative)

  double alpha_, beta_;
  LevyMeasureSpec levy_;
  double shift_ = 0.0;
};

// Dense profile of t -> b_h^theta(t) = b^theta(h - t) and
// Gamma(t) = int_0^t gamma_theta(b_h^theta(r)) dr, built from one root-find
// and one ODE integration (d/dt b_h = psi_theta(b_h)).
class ExtinctionProfile {
 public:
  ExtinctionProfile(const BranchingMechanism& m, double theta, double h,
                    double b_cap = 1e12);

  double h() const { return h_; }
  double theta() const { return theta_; }
  double b(double t) const;          // b_h^theta(t)
  double gamma_int(double t) const;  // Gamma(t)
  double t_cut() const { return t_cut_; }
  double b_at_h() const { return b0_; }  // b^theta(h)

  const BranchingMechanism& shifted_mechanism() const { return m_theta_; }

 private:
  BranchingMechanism m_theta_;
  double theta_, h_, b0_, t_cut_;
  OdeSolution sol_;
};

// Density of the exit time A_h at theta (Prop. dbq forms). `first_form` is
// psi_theta(b(h)) int_0^h gamma/psi; `second_form` integrates
// gamma e^{-psi'(theta) a - Gamma(a)} directly.
struct ExitDensityForms {
  double first_form;
  double second_form;
};
ExitDensityForms exit_density_forms(const BranchingMechanism& m, double theta, double h);
double exit_density(const BranchingMechanism& m, double theta, double h);

// Conditional exit-given-ascension laws (Prop. Qh-A): p_geq = N[A_h >= theta | A
// = theta0], p_eq = N[A_h = A | A = theta0] (two algebraic routes, which must
// agree), and c = C(theta, h).
struct ExitGivenAscension {
  double p_geq;
  double p_eq;
  double c;
  double p_eq_alt;
};
ExitGivenAscension exit_given_ascension(const BranchingMechanism& m, double theta0, double theta,
                                        double h);

// Spine height density f(t) = gamma_theta(b_h(t)) exp(-Gamma(t)) on [0, h).
double spine_density(const BranchingMechanism& m, double theta, double h, double t);

// Text format used by the CLI and config files:
//   quadratic alpha=<f> beta=<f>
//   stable alpha=<f> beta=<f> index=<f> scale=<f>
//   atoms alpha=<f> beta=<f> atoms=r1:w1,r2:w2,...
BranchingMechanism parse_mechanism(const std::string& text);
std::string format_mechanism(const BranchingMechanism& m);

}  // namespace levytree
