#include "levytree/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "levytree/errors.hpp"

namespace levytree {

namespace {

bool has_power_tail(const LevyMeasureSpec& levy) {
  if (std::holds_alternative<StableMeasure>(levy)) return true;
  if (auto* t = std::get_if<TabulatedMeasure>(&levy)) return t->tail_scale > 0.0;
  return false;
}

// e^{-x} - 1 + x without cancellation for small x.
double expm1_compensated(double x) {
  double ax = std::fabs(x);
  if (ax > 1e-3) return std::expm1(-x) + x;
  double x2 = x * x;
  return x2 * (0.5 + x * (-1.0 / 6.0 + x * (1.0 / 24.0 + x * (-1.0 / 120.0))));
}

}  // namespace

BranchingMechanism::BranchingMechanism(double alpha, double beta, LevyMeasureSpec levy)
    : alpha_(alpha), beta_(beta), levy_(std::move(levy)) {
  validate();
}

void BranchingMechanism::validate() const {
  if (beta_ < 0.0) throw DomainError("mechanism: beta must be >= 0");
  bool small_jump_infinite = false;  // int_(0,1) r Pi(dr) = +inf
  if (auto* s = std::get_if<StableMeasure>(&levy_)) {
    if (!(s->index > 1.0 && s->index < 2.0))
      throw DomainError("mechanism: stable index must lie in (1,2)");
    if (!(s->scale > 0.0)) throw DomainError("mechanism: stable scale must be positive");
    small_jump_infinite = true;
  } else if (auto* f = std::get_if<FiniteAtomsMeasure>(&levy_)) {
    for (auto& [r, w] : f->atoms)
      if (!(r > 0.0) || !(w > 0.0)) throw DomainError("mechanism: atoms need r > 0, w > 0");
  } else if (auto* t = std::get_if<TabulatedMeasure>(&levy_)) {
    if (t->r.size() != t->density.size() || t->r.size() < 2)
      throw DomainError("mechanism: tabulated grid needs >= 2 samples");
    for (std::size_t i = 0; i < t->r.size(); ++i) {
      if (!(t->r[i] > 0.0) || t->density[i] < 0.0)
        throw DomainError("mechanism: tabulated grid needs r > 0 and density >= 0");
      if (i > 0 && t->r[i] <= t->r[i - 1])
        throw DomainError("mechanism: tabulated grid must be increasing");
    }
    if (t->r.back() < 1.0)
      throw DomainError("mechanism: tabulated grid must extend to r >= 1");
    if (t->tail_scale < 0.0) throw DomainError("mechanism: tail scale must be >= 0");
    if (t->tail_scale > 0.0 && t->tail_index <= 1.0)
      throw DomainError("mechanism: tabulated tail index must exceed 1 (conservativity)");
  }
  // Assumption 1: conservative (psi'(0+) > -inf holds for every accepted
  // variant) and beta > 0 or infinite small-jump activity.
  if (beta_ == 0.0 && !small_jump_infinite)
    throw DomainError("mechanism: needs beta > 0 or infinite small-jump activity");
  // Assumption 2 (Grey): beta > 0 or stable-like growth of psi.
  bool grey = beta_ > 0.0 || std::holds_alternative<StableMeasure>(levy_);
  if (!grey) throw DomainError("mechanism: Grey condition fails");
}

ThetaWindow BranchingMechanism::theta_window() const {
  if (has_power_tail(levy_)) return {0.0 - shift_, true};
  return {-kInf, false};
}

double BranchingMechanism::base_eval(double lambda, int order) const {
  ThetaWindow base_win = has_power_tail(levy_) ? ThetaWindow{0.0, true} : ThetaWindow{-kInf, false};
  if (!base_win.member(lambda))
    throw DomainError("mechanism: evaluation point below the analytic window");
  double out = 0.0;
  switch (order) {
    case 0: out = alpha_ * lambda + beta_ * lambda * lambda; break;
    case 1: out = alpha_ + 2.0 * beta_ * lambda; break;
    case 2: out = 2.0 * beta_; break;
    default: throw DomainError("mechanism: order must be 0, 1, or 2");
  }
  if (std::holds_alternative<ZeroMeasure>(levy_)) return out;

  if (auto* s = std::get_if<StableMeasure>(&levy_)) {
    const double a = s->index, c = s->scale;
    const double K = std::tgamma(2.0 - a) / (a * (a - 1.0));
    switch (order) {
      case 0: return out + c * K * std::pow(lambda, a) - lambda * c / (a - 1.0);
      case 1: return out + c * K * a * std::pow(lambda, a - 1.0) - c / (a - 1.0);
      case 2: return out + c * K * a * (a - 1.0) * std::pow(lambda, a - 2.0);
    }
  }
  if (auto* f = std::get_if<FiniteAtomsMeasure>(&levy_)) {
    double acc = 0.0;
    for (auto& [r, w] : f->atoms) {
      double e = std::exp(-lambda * r);
      switch (order) {
        case 0:
          acc += w * (r < 1.0 ? expm1_compensated(lambda * r) : std::expm1(-lambda * r));
          break;
        case 1: acc += w * (-r * e + (r < 1.0 ? r : 0.0)); break;
        case 2: acc += w * r * r * e; break;
      }
    }
    return out + acc;
  }
  auto& t = std::get<TabulatedMeasure>(levy_);
  auto integrand = [&](double r) {
    double e = std::exp(-lambda * r);
    switch (order) {
      case 0:
        return r < 1.0 ? expm1_compensated(lambda * r) : std::expm1(-lambda * r);
      case 1: return -r * e + (r < 1.0 ? r : 0.0);
      default: return r * r * e;
    }
  };
  // Trapezoid in log r over the sampled grid.
  double acc = 0.0;
  for (std::size_t i = 0; i + 1 < t.r.size(); ++i) {
    double u0 = std::log(t.r[i]), u1 = std::log(t.r[i + 1]);
    double f0 = integrand(t.r[i]) * t.density[i] * t.r[i];
    double f1 = integrand(t.r[i + 1]) * t.density[i + 1] * t.r[i + 1];
    acc += 0.5 * (f0 + f1) * (u1 - u0);
  }
  if (t.tail_scale > 0.0) {
    const double R = t.r.back(), a = t.tail_index, ts = t.tail_scale;
    // substitution r = R/s maps the tail to s in (0,1)
    switch (order) {
      case 0:
        acc += ts * std::pow(R, -a) *
               integrate_tanh_sinh(
                   [&](double s) { return (std::expm1(-lambda * R / s)) * std::pow(s, a - 1.0); },
                   0.0, 1.0, 1e-12);
        break;
      case 1:
        acc += -ts * std::pow(R, 1.0 - a) *
               integrate_tanh_sinh(
                   [&](double s) { return std::exp(-lambda * R / s) * std::pow(s, a - 2.0); }, 0.0,
                   1.0, 1e-12);
        break;
      case 2:
        acc += ts * std::pow(R, 2.0 - a) *
               integrate_tanh_sinh(
                   [&](double s) { return std::exp(-lambda * R / s) * std::pow(s, a - 3.0); }, 0.0,
                   1.0, 1e-12);
        break;
    }
  }
  return out + acc;
}

double BranchingMechanism::eval(double lambda, int order) const {
  double x = lambda + shift_;
  if (order == 0) {
    if (shift_ == 0.0) return base_eval(x, 0);
    return base_eval(x, 0) - base_eval(shift_, 0);
  }
  return base_eval(x, order);
}

BranchingMechanism BranchingMechanism::shifted(double theta) const {
  if (!member(theta)) throw DomainError("shift: theta outside the window");
  BranchingMechanism m = *this;
  m.shift_ += theta;
  return m;
}

BranchingMechanism::Criticality BranchingMechanism::criticality() const {
  double d = eval(0.0, 1);
  if (d > 0.0) return Criticality::subcritical;
  if (d == 0.0) return Criticality::critical;
  return Criticality::supercritical;
}

double BranchingMechanism::argmin_theta() const {
  double d0 = eval(0.0, 1);
  if (d0 == 0.0) return 0.0;
  ThetaWindow win = theta_window();
  auto dpsi = [&](double q) { return eval(q, 1); };
  double lo, hi;
  if (d0 > 0.0) {
    // root below 0 (if any); psi' is increasing
    hi = 0.0;
    lo = win.closed ? win.theta_inf : std::max(-1.0, win.theta_inf == -kInf ? -1.0 : win.theta_inf);
    if (win.theta_inf == -kInf) {
      lo = -1.0;
      while (dpsi(lo) > 0.0 && lo > -1e12) lo *= 2.0;
      if (dpsi(lo) > 0.0) return -kInf;  // psi' positive on the whole window
    } else {
      double edge = win.closed ? win.theta_inf : win.theta_inf + 1e-12;
      if (dpsi(edge) >= 0.0) return edge;  // min at the window edge
      lo = edge;
    }
    return brent(dpsi, lo, hi, 1e-14);
  }
  lo = 0.0;
  hi = 1.0;
  while (dpsi(hi) < 0.0 && hi < 1e12) hi *= 2.0;
  if (dpsi(hi) < 0.0) throw NoRootError("mechanism: psi' has no positive root");
  return brent(dpsi, lo, hi, 1e-14);
}

std::optional<double> BranchingMechanism::theta_star() const {
  switch (criticality()) {
    case Criticality::critical: return 0.0;
    case Criticality::supercritical: return argmin_theta();
    default: return std::nullopt;
  }
}

BranchingMechanism::InvertResult BranchingMechanism::invert(double v) const {
  std::optional<double> ts = theta_star();
  double lo = ts ? *ts : argmin_theta();
  if (lo == -kInf) lo = 0.0;  // psi strictly increasing on the window
  double f_lo = eval(lo, 0);
  if (v < f_lo - 1e-12 * (1.0 + std::fabs(f_lo)))
    throw NoRootError("invert: value below the range of psi on Theta_*");
  if (v <= f_lo) return {lo, ts};
  double hi = lo + 1.0;
  while (eval(hi, 0) < v) {
    hi = lo + 2.0 * (hi - lo);
    if (hi > 1e14) throw NoRootError("invert: no bracket found");
  }
  auto f = [&](double q) { return eval(q, 0) - v; };
  double root = brent(f, lo, hi, 1e-15);
  // polish: one Newton step sharpens the bracket tolerance
  double d = eval(root, 1);
  if (d > 0.0) root -= (eval(root, 0) - v) / d;
  return {root, ts};
}

double BranchingMechanism::theta_bar(double theta) const {
  if (!member(theta)) throw DomainError("theta_bar: theta outside the window");
  if (eval(theta, 1) >= 0.0) return theta;  // psi_theta (sub)critical
  return invert(eval(theta, 0)).psi_inverse;
}

double BranchingMechanism::cumulant(double a, double lambda) const {
  if (a < 0.0) throw DomainError("cumulant: negative time");
  if (a == 0.0) return lambda;
  if (lambda < 0.0) throw DomainError("cumulant: negative lambda");
  if (lambda == 0.0) return 0.0;
  OdeRhs rhs = [this](double, const std::vector<double>& y, std::vector<double>& dy) {
    dy[0] = -eval(y[0], 0);
  };
  OdeSolution sol = ode_solve(rhs, 0.0, a, {lambda}, 3e-13, 1e-30);
  return sol.knots().back().y[0];
}

double BranchingMechanism::tail_integral(double b, int k) const {
  if (!(b > 0.0)) throw DomainError("tail_integral: b must be positive");
  // substitute s = 1/r: int_b^inf dr/psi^k = int_0^{1/b} ds s^{k-2}/(s psi(1/s))^k
  auto g = [&](double s) {
    double r = 1.0 / s;
    double p = eval(r, 0);
    double sp = s * p;
    double v = 1.0;
    for (int i = 0; i < k; ++i) v *= sp;
    return std::pow(s, k - 2) / v;
  };
  double val = integrate_tanh_sinh(g, 0.0, 1.0 / b, 1e-12);
  if (!std::isfinite(val)) throw QuadratureError("tail_integral: quadrature failed");
  return val;
}

double BranchingMechanism::extinction(double h, double t) const {
  if (!(h > 0.0) || t < 0.0 || t >= h) throw DomainError("extinction: need 0 <= t < h");
  double span = h - t;
  double q0 = invert(0.0).psi_inverse;  // largest root of psi
  double delta = 1e-12 * (1.0 + std::fabs(q0));
  double lo = q0 + delta;
  while (tail_integral(lo) < span) {
    delta *= 0.25;
    lo = q0 + delta;
    if (delta < 1e-300) throw NoRootError("extinction: cannot bracket near the root of psi");
  }
  double hi = lo + 1.0;
  while (tail_integral(hi) > span) {
    hi = lo + 2.0 * (hi - lo);
    if (hi > 1e15) throw NoRootError("extinction: no upper bracket");
  }
  auto f = [&](double b) { return tail_integral(b) - span; };
  return brent(f, lo, hi, 1e-15);
}

double BranchingMechanism::gamma_theta(double theta, double lambda) const {
  if (lambda < 0.0) throw DomainError("gamma_theta: lambda must be >= 0");
  if (!member(theta) || !member(theta + lambda))
    throw DomainError("gamma_theta: arguments outside the window");
  return eval(lambda + theta, 1) - eval(theta, 1);
}

ExtinctionProfile::ExtinctionProfile(const BranchingMechanism& m, double theta, double h,
                                     double b_cap)
    : m_theta_(m.shifted(theta)), theta_(theta), h_(h) {
  b0_ = m_theta_.extinction(h);
  OdeRhs rhs = [this](double, const std::vector<double>& y, std::vector<double>& dy) {
    dy[0] = m_theta_.eval(y[0], 0);            // d/dt b_h = psi_theta(b_h)
    dy[1] = m_theta_.eval(y[0], 1) - m_theta_.eval(0.0, 1);  // gamma_theta(b_h)
  };
  auto stop = [b_cap](double, const std::vector<double>& y) { return y[0] > b_cap; };
  sol_ = ode_solve(rhs, 0.0, h, {b0_, 0.0}, 1e-12, 1e-14, stop, h / 512.0);
  t_cut_ = sol_.t_back();
}

double ExtinctionProfile::b(double t) const {
  if (t < 0.0 || t > h_) throw DomainError("profile: t outside [0,h]");
  if (t >= t_cut_) return sol_.knots().back().y[0];
  return sol_.eval(t, 0);
}

double ExtinctionProfile::gamma_int(double t) const {
  if (t < 0.0 || t > h_) throw DomainError("profile: t outside [0,h]");
  if (t >= t_cut_) return sol_.knots().back().y[1];
  return sol_.eval(t, 1);
}

ExitDensityForms exit_density_forms(const BranchingMechanism& m, double theta, double h) {
  ExtinctionProfile prof(m, theta, h);
  const BranchingMechanism& mt = prof.shifted_mechanism();
  double psi_b0 = mt.eval(prof.b_at_h(), 0);
  double dpsi0 = mt.eval(0.0, 1);  // psi'(theta)
  double t1 = prof.t_cut();
  double first = psi_b0 * integrate_adaptive(
                              [&](double a) {
                                double b = prof.b(a);
                                return (mt.eval(b, 1) - dpsi0) / mt.eval(b, 0);
                              },
                              0.0, t1, 1e-10, 1e-14);
  double second = integrate_adaptive(
      [&](double a) {
        double b = prof.b(a);
        return (mt.eval(b, 1) - dpsi0) * std::exp(-dpsi0 * a - prof.gamma_int(a));
      },
      0.0, t1, 1e-10, 1e-14);
  return {first, second};
}

double exit_density(const BranchingMechanism& m, double theta, double h) {
  return exit_density_forms(m, theta, h).first_form;
}

ExitGivenAscension exit_given_ascension(const BranchingMechanism& m, double theta0, double theta,
                                        double h) {
  if (!m.member(theta0) || theta0 >= 0.0)
    throw DomainError("exit_given_ascension: need theta_inf < theta0 < 0");
  if (theta < theta0) throw DomainError("exit_given_ascension: need theta >= theta0");
  double bar0 = m.theta_bar(theta0);
  double hat = bar0 - theta0 + theta;

  auto tail_term = [&](double q) {
    // psi'(q) psi_q(b^q(h)) int_{b^q(h)}^inf dr / psi_q(r)^2
    BranchingMechanism mq = m.shifted(q);
    double bq = mq.extinction(h);
    return m.eval(q, 1) * mq.eval(bq, 0) * mq.tail_integral(bq, 2);
  };

  double p_geq = 1.0 - tail_term(hat);
  double p_eq = tail_term(bar0);
  // eq:Q=A|A route: same leading psi'(bar theta0) but the theta0-shifted pair
  BranchingMechanism m0 = m.shifted(theta0);
  double b0 = m0.extinction(h);
  double p_eq_alt = m.eval(bar0, 1) * m0.eval(b0, 0) * m0.tail_integral(b0, 2);
  // psi_theta0 is evaluated near its largest root, so rounding in b0 gets
  // amplified by psi'(root) b0 / psi(b0); scale the agreement check by it.
  double cond = std::fabs(m.eval(bar0, 1) * b0 / m0.eval(b0, 0));
  double tol = std::max(1e-8, 1e-13 * cond);
  if (std::fabs(p_eq - p_eq_alt) > tol * std::max(1.0, std::fabs(p_eq)))
    throw QuadratureError("exit_given_ascension: conjugate routes disagree");
  double c = m.member(theta) ? (m.eval(m.theta_bar(theta), 1) *
                                [&] {
                                  BranchingMechanism mq = m.shifted(theta);
                                  double bq = mq.extinction(h);
                                  return mq.eval(bq, 0) * mq.tail_integral(bq, 2);
                                }())
                             : kNaN;
  return {p_geq, p_eq, c, p_eq_alt};
}

double spine_density(const BranchingMechanism& m, double theta, double h, double t) {
  if (t < 0.0 || t >= h) throw DomainError("spine_density: t outside [0,h)");
  ExtinctionProfile prof(m, theta, h);
  const BranchingMechanism& mt = prof.shifted_mechanism();
  double b = prof.b(t);
  double g = mt.eval(b, 1) - mt.eval(0.0, 1);
  return g * std::exp(-prof.gamma_int(t));
}

namespace {

std::vector<std::string> split_ws(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double parse_value(const std::string& kv, const std::string& key) {
  auto pos = kv.find('=');
  if (pos == std::string::npos || kv.substr(0, pos) != key)
    throw ConfigError("mechanism spec: expected " + key + "=<value>, got '" + kv + "'");
  try {
    return std::stod(kv.substr(pos + 1));
  } catch (const std::exception&) {
    throw ConfigError("mechanism spec: bad number in '" + kv + "'");
  }
}

}  // namespace

BranchingMechanism parse_mechanism(const std::string& text) {
  auto toks = split_ws(text);
  if (toks.empty()) throw ConfigError("mechanism spec: empty");
  const std::string& kind = toks[0];
  if (kind == "quadratic") {
    if (toks.size() != 3) throw ConfigError("mechanism spec: quadratic alpha=<f> beta=<f>");
    return BranchingMechanism(parse_value(toks[1], "alpha"), parse_value(toks[2], "beta"),
                              ZeroMeasure{});
  }
  if (kind == "stable") {
    if (toks.size() != 5)
      throw ConfigError("mechanism spec: stable alpha=<f> beta=<f> index=<f> scale=<f>");
    return BranchingMechanism(parse_value(toks[1], "alpha"), parse_value(toks[2], "beta"),
                              StableMeasure{parse_value(toks[3], "index"),
                                            parse_value(toks[4], "scale")});
  }
  if (kind == "atoms") {
    if (toks.size() != 4)
      throw ConfigError("mechanism spec: atoms alpha=<f> beta=<f> atoms=r1:w1,...");
    auto pos = toks[3].find('=');
    if (pos == std::string::npos || toks[3].substr(0, pos) != "atoms")
      throw ConfigError("mechanism spec: expected atoms=r1:w1,...");
    FiniteAtomsMeasure fam;
    std::istringstream in(toks[3].substr(pos + 1));
    std::string item;
    while (std::getline(in, item, ',')) {
      auto colon = item.find(':');
      if (colon == std::string::npos) throw ConfigError("mechanism spec: atom needs r:w");
      try {
        fam.atoms.emplace_back(std::stod(item.substr(0, colon)), std::stod(item.substr(colon + 1)));
      } catch (const std::exception&) {
        throw ConfigError("mechanism spec: bad atom '" + item + "'");
      }
    }
    if (fam.atoms.empty()) throw ConfigError("mechanism spec: atom list empty");
    return BranchingMechanism(parse_value(toks[1], "alpha"), parse_value(toks[2], "beta"),
                              std::move(fam));
  }
  throw ConfigError("mechanism spec: unknown kind '" + kind + "'");
}

std::string format_mechanism(const BranchingMechanism& m) {
  std::ostringstream out;
  out.precision(17);
  if (std::holds_alternative<ZeroMeasure>(m.levy())) {
    out << "quadratic alpha=" << m.alpha() << " beta=" << m.beta();
  } else if (auto* s = std::get_if<StableMeasure>(&m.levy())) {
    out << "stable alpha=" << m.alpha() << " beta=" << m.beta() << " index=" << s->index
        << " scale=" << s->scale;
  } else if (auto* f = std::get_if<FiniteAtomsMeasure>(&m.levy())) {
    out << "atoms alpha=" << m.alpha() << " beta=" << m.beta() << " atoms=";
    for (std::size_t i = 0; i < f->atoms.size(); ++i) {
      if (i) out << ',';
      out << f->atoms[i].first << ':' << f->atoms[i].second;
    }
  } else {
    out << "tabulated";
  }
  if (m.shift_total() != 0.0) out << " (shift " << m.shift_total() << ")";
  return out.str();
}

}  // namespace levytree
