#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

namespace levytree {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using Fn1 = std::function<double(double)>;

// Brent root finder on a bracketing interval [a,b] with f(a)*f(b) <= 0.
// Throws NoRootError if the bracket is invalid.
double brent(const Fn1& f, double a, double b, double tol = 1e-14, int max_iter = 200);

// Grows a bracket geometrically from [lo, hi] until f changes sign.
// `decreasing` hints the search direction for monotone f.
std::pair<double, double> grow_bracket(const Fn1& f, double lo, double hi, int max_grow = 200);

// Adaptive Simpson quadrature on [a,b].
double integrate_adaptive(const Fn1& f, double a, double b, double rel_tol = 1e-11,
                          double abs_tol = 0.0, int max_depth = 48);

// Tanh-sinh (double exponential) quadrature on (a,b); tolerates integrable
// endpoint singularities. Throws QuadratureError when the requested tolerance
// cannot be certified.
double integrate_tanh_sinh(const Fn1& f, double a, double b, double rel_tol = 1e-11,
                           int max_level = 12);

// Dense adaptive Runge-Kutta (Cash-Karp 4(5)) solution of y' = f(t, y) for a
// small vector state. Knots carry values and derivatives so that evaluation
// between knots is cubic-Hermite.
class OdeSolution {
 public:
  struct Knot {
    double t;
    std::vector<double> y;
    std::vector<double> dy;
  };

  const std::vector<Knot>& knots() const { return knots_; }
  double t_front() const { return knots_.front().t; }
  double t_back() const { return knots_.back().t; }

  // Hermite interpolation of component i at time t (clamped to the span).
  double eval(double t, std::size_t i) const;

  std::vector<Knot> knots_;
};

using OdeRhs = std::function<void(double, const std::vector<double>&, std::vector<double>&)>;

// Integrates from t0 to t1 (t1 > t0). `stop` (optional) ends integration early
// when it returns true at an accepted step. Relative/absolute mixed control.
// `max_h` caps the step so the Hermite dense output stays accurate.
OdeSolution ode_solve(const OdeRhs& rhs, double t0, double t1, std::vector<double> y0,
                      double rel_tol = 1e-11, double abs_tol = 1e-13,
                      const std::function<bool(double, const std::vector<double>&)>& stop = nullptr,
                      double max_h = kInf);

// Regularized upper incomplete gamma Q(a, x) = Gamma(a,x)/Gamma(a), a > 0.
double gamma_q(double a, double x);

// Chi-square upper tail P(X >= x) with k degrees of freedom.
double chi2_sf(double x, int k);

// Kolmogorov distribution tail Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2).
double kolmogorov_sf(double lambda);

}  // namespace levytree
