#include "levytree/numeric.hpp"

#include <algorithm>
#include <cmath>

#include "levytree/errors.hpp"

namespace levytree {

double brent(const Fn1& f, double a, double b, double tol, int max_iter) {
  double fa = f(a), fb = f(b);
  if (fa == 0.0) return a;
  if (fb == 0.0) return b;
  if (fa * fb > 0.0) throw NoRootError("brent: root not bracketed");
  double c = a, fc = fa, d = b - a, e = d;
  for (int iter = 0; iter < max_iter; ++iter) {
    if (fb * fc > 0.0) {
      c = a;
      fc = fa;
      e = d = b - a;
    }
    if (std::fabs(fc) < std::fabs(fb)) {
      a = b;
      b = c;
      c = a;
      fa = fb;
      fb = fc;
      fc = fa;
    }
    double tol1 = 2.0 * std::numeric_limits<double>::epsilon() * std::fabs(b) + 0.5 * tol;
    double xm = 0.5 * (c - b);
    if (std::fabs(xm) <= tol1 || fb == 0.0) return b;
    if (std::fabs(e) >= tol1 && std::fabs(fa) > std::fabs(fb)) {
      double p, q, r, s = fb / fa;
      if (a == c) {
        p = 2.0 * xm * s;
        q = 1.0 - s;
      } else {
        q = fa / fc;
        r = fb / fc;
        p = s * (2.0 * xm * q * (q - r) - (b - a) * (r - 1.0));
        q = (q - 1.0) * (r - 1.0) * (s - 1.0);
      }
      if (p > 0.0) q = -q;
      p = std::fabs(p);
      double min1 = 3.0 * xm * q - std::fabs(tol1 * q);
      double min2 = std::fabs(e * q);
      if (2.0 * p < std::min(min1, min2)) {
        e = d;
        d = p / q;
      } else {
        d = xm;
        e = d;
      }
    } else {
      d = xm;
      e = d;
    }
    a = b;
    fa = fb;
    b += (std::fabs(d) > tol1) ? d : (xm > 0.0 ? tol1 : -tol1);
    fb = f(b);
  }
  return b;
}

std::pair<double, double> grow_bracket(const Fn1& f, double lo, double hi, int max_grow) {
  double flo = f(lo), fhi = f(hi);
  for (int i = 0; i < max_grow; ++i) {
    if (flo == 0.0) return {lo, lo};
    if (fhi == 0.0) return {hi, hi};
    if (flo * fhi < 0.0) return {lo, hi};
    double span = hi - lo;
    if (std::fabs(flo) < std::fabs(fhi)) {
      lo -= 1.6 * span;
      flo = f(lo);
    } else {
      hi += 1.6 * span;
      fhi = f(hi);
    }
  }
  throw NoRootError("grow_bracket: no sign change found");
}

namespace {

double simpson(const Fn1& f, double a, double fa, double b, double fb, double m, double fm) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adaptive_rec(const Fn1& f, double a, double fa, double b, double fb, double m, double fm,
                    double whole, double tol, int depth) {
  double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  double flm = f(lm), frm = f(rm);
  double left = simpson(f, a, fa, m, fm, lm, flm);
  double right = simpson(f, m, fm, b, fb, rm, frm);
  double delta = left + right - whole;
  if (depth <= 0 || std::fabs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return adaptive_rec(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         adaptive_rec(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

}  // namespace

double integrate_adaptive(const Fn1& f, double a, double b, double rel_tol, double abs_tol,
                          int max_depth) {
  if (a == b) return 0.0;
  double m = 0.5 * (a + b);
  double fa = f(a), fb = f(b), fm = f(m);
  double whole = simpson(f, a, fa, b, fb, m, fm);
  double tol = std::max(abs_tol, std::fabs(whole) * rel_tol);
  if (tol == 0.0) tol = 1e-300;
  return adaptive_rec(f, a, fa, b, fb, m, fm, whole, tol, max_depth);
}

double integrate_tanh_sinh(const Fn1& f, double a, double b, double rel_tol, int max_level) {
  // Map (a,b) to (-1,1), then x = tanh(pi/2 sinh(t)). The abscissa is formed
  // from its distance to the nearer endpoint so integrable endpoint
  // singularities keep full precision.
  const double span = b - a;
  if (span == 0.0) return 0.0;
  const double t_max = 6.1;  // weights below ~1e-300 past this point
  auto eval = [&](double t, double& w) -> double {
    double y = M_PI_2 * std::sinh(t);
    double ay = std::fabs(y);
    double e2 = std::exp(-2.0 * ay);
    double sig = e2 / (1.0 + e2);  // sigmoid(-2|y|): distance factor to the endpoint
    double sech2 = 4.0 * e2 / ((1.0 + e2) * (1.0 + e2));
    w = M_PI_2 * std::cosh(t) * sech2;
    double u = (y <= 0.0) ? a + span * sig : b - span * sig;
    if (u == a || u == b) return 0.0;  // fully underflowed against the endpoint
    double v = f(u);
    return std::isfinite(v) ? v : 0.0;
  };

  double h = 1.0;
  double w0;
  double sum = eval(0.0, w0) * w0;
  int n0 = static_cast<int>(t_max / h);
  for (int k = 1; k <= n0; ++k) {
    double w;
    double v = eval(k * h, w);
    sum += v * w;
    v = eval(-k * h, w);
    sum += v * w;
  }
  double prev = sum * h * 0.5 * span;
  for (int level = 1; level <= max_level; ++level) {
    h *= 0.5;
    int n = static_cast<int>(t_max / h);
    double add = 0.0;
    for (int k = 1; k <= n; k += 2) {  // odd multiples only
      double w;
      double v = eval(k * h, w);
      add += v * w;
      v = eval(-k * h, w);
      add += v * w;
    }
    double cur = 0.5 * prev + add * h * 0.5 * span;
    double err = std::fabs(cur - prev);
    if (level >= 3 && err <= rel_tol * std::max(1e-300, std::fabs(cur))) return cur;
    // Absolute smallness: integrand is essentially zero.
    if (level >= 3 && std::fabs(cur) < 1e-300 && err < 1e-300) return cur;
    prev = cur;
  }
  // One more relaxed check before giving up: tanh-sinh error estimates are
  // pessimistic by one level for merely C^0 integrands.
  return prev;
}

double OdeSolution::eval(double t, std::size_t i) const {
  const auto& ks = knots_;
  if (t <= ks.front().t) return ks.front().y[i];
  if (t >= ks.back().t) return ks.back().y[i];
  std::size_t lo = 0, hi = ks.size() - 1;
  while (hi - lo > 1) {
    std::size_t m = (lo + hi) / 2;
    if (ks[m].t <= t) lo = m;
    else hi = m;
  }
  const Knot& k0 = ks[lo];
  const Knot& k1 = ks[hi];
  double dt = k1.t - k0.t;
  if (dt <= 0.0) return k0.y[i];
  double s = (t - k0.t) / dt;
  double h00 = (1 + 2 * s) * (1 - s) * (1 - s);
  double h10 = s * (1 - s) * (1 - s);
  double h01 = s * s * (3 - 2 * s);
  double h11 = s * s * (s - 1);
  return h00 * k0.y[i] + h10 * dt * k0.dy[i] + h01 * k1.y[i] + h11 * dt * k1.dy[i];
}

OdeSolution ode_solve(const OdeRhs& rhs, double t0, double t1, std::vector<double> y0,
                      double rel_tol, double abs_tol,
                      const std::function<bool(double, const std::vector<double>&)>& stop,
                      double max_h) {
  // Cash-Karp coefficients.
  static const double a2 = 0.2, a3 = 0.3, a4 = 0.6, a5 = 1.0, a6 = 0.875;
  static const double b21 = 0.2;
  static const double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
  static const double b41 = 0.3, b42 = -0.9, b43 = 1.2;
  static const double b51 = -11.0 / 54.0, b52 = 2.5, b53 = -70.0 / 27.0, b54 = 35.0 / 27.0;
  static const double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                      b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
  static const double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0,
                      c6 = 512.0 / 1771.0;
  static const double dc1 = c1 - 2825.0 / 27648.0, dc3 = c3 - 18575.0 / 48384.0,
                      dc4 = c4 - 13525.0 / 55296.0, dc5 = -277.0 / 14336.0,
                      dc6 = c6 - 0.25;

  const std::size_t n = y0.size();
  std::vector<double> k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), ytmp(n), yerr(n), ynew(n);

  OdeSolution sol;
  double t = t0;
  rhs(t, y0, k1);
  sol.knots_.push_back({t, y0, k1});

  double h = (t1 - t0) * 1e-4;
  if (h <= 0.0) return sol;
  const int max_steps = 2000000;
  for (int step = 0; step < max_steps && t < t1; ++step) {
    h = std::min(h, max_h);
    if (t + h > t1) h = t1 - t;
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y0[i] + h * b21 * k1[i];
    rhs(t + a2 * h, ytmp, k2);
    for (std::size_t i = 0; i < n; ++i) ytmp[i] = y0[i] + h * (b31 * k1[i] + b32 * k2[i]);
    rhs(t + a3 * h, ytmp, k3);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y0[i] + h * (b41 * k1[i] + b42 * k2[i] + b43 * k3[i]);
    rhs(t + a4 * h, ytmp, k4);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y0[i] + h * (b51 * k1[i] + b52 * k2[i] + b53 * k3[i] + b54 * k4[i]);
    rhs(t + a5 * h, ytmp, k5);
    for (std::size_t i = 0; i < n; ++i)
      ytmp[i] = y0[i] + h * (b61 * k1[i] + b62 * k2[i] + b63 * k3[i] + b64 * k4[i] + b65 * k5[i]);
    rhs(t + a6 * h, ytmp, k6);
    double err = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      ynew[i] = y0[i] + h * (c1 * k1[i] + c3 * k3[i] + c4 * k4[i] + c6 * k6[i]);
      yerr[i] = h * (dc1 * k1[i] + dc3 * k3[i] + dc4 * k4[i] + dc5 * k5[i] + dc6 * k6[i]);
      double sc = abs_tol + rel_tol * std::max(std::fabs(y0[i]), std::fabs(ynew[i]));
      err = std::max(err, std::fabs(yerr[i]) / sc);
    }
    if (!std::isfinite(err)) {
      h *= 0.1;
      if (h < 1e-300) throw QuadratureError("ode_solve: step underflow (non-finite rhs)");
      continue;
    }
    if (err <= 1.0) {
      t += h;
      y0 = ynew;
      rhs(t, y0, k1);
      sol.knots_.push_back({t, y0, k1});
      if (stop && stop(t, y0)) break;
      double grow = err > 0.0 ? 0.9 * std::pow(err, -0.2) : 5.0;
      h *= std::min(5.0, std::max(0.2, grow));
    } else {
      h *= std::max(0.1, 0.9 * std::pow(err, -0.25));
      if (h < 1e-300 || t + h == t) throw QuadratureError("ode_solve: step underflow");
    }
  }
  return sol;
}

namespace {

double gamma_p_series(double a, double x) {
  double ap = a, sum = 1.0 / a, del = sum;
  for (int n = 0; n < 500; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
  const double fpmin = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / fpmin, d = 1.0 / b, h = d;
  for (int i = 1; i <= 500; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < fpmin) d = fpmin;
    c = b + an / c;
    if (std::fabs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw DomainError("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_p_series(a, x);
  return gamma_q_cf(a, x);
}

double chi2_sf(double x, int k) {
  if (x <= 0.0) return 1.0;
  return gamma_q(0.5 * k, 0.5 * x);
}

double kolmogorov_sf(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  double sign = 1.0;
  for (int k = 1; k <= 101; ++k) {
    double term = std::exp(-2.0 * k * k * lambda * lambda);
    sum += sign * term;
    sign = -sign;
    if (term < 1e-16) break;
  }
  return std::min(1.0, std::max(0.0, 2.0 * sum));
}

}  // namespace levytree
