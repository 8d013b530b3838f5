#include "levytree/sampler.hpp"

#include <algorithm>
#include <cmath>

#include "levytree/errors.hpp"
#include "levytree/simd/gauss.hpp"

namespace levytree {

QuadraticView quadratic_view(const BranchingMechanism& m) {
  if (!m.is_quadratic()) throw DomainError("sampler: mechanism must be quadratic");
  double beta = m.beta();
  if (!(beta > 0.0)) throw DomainError("sampler: quadratic mechanism needs beta > 0");
  double theta = m.eval(0.0, 1) / (2.0 * beta);  // psi'(0) = 2 beta theta
  return {beta, theta};
}

double sigma_tail_mass(double beta, double theta, double s) {
  if (!(s > 0.0)) throw DomainError("sigma_tail_mass: s must be positive");
  double a = beta * theta * theta;
  double t = 2.0 / std::sqrt(s) * std::exp(-a * s);
  if (a > 0.0) t -= 2.0 * std::sqrt(a * M_PI) * std::erfc(std::sqrt(a * s));
  return t / (2.0 * std::sqrt(M_PI * beta));
}

double sigma_partial_mean(double beta, double theta, double s) {
  if (!(s > 0.0)) throw DomainError("sigma_partial_mean: s must be positive");
  double a = beta * theta * theta;
  if (a == 0.0) return std::sqrt(s / (M_PI * beta));
  return std::erf(std::sqrt(a * s)) / (2.0 * std::sqrt(a * beta));
}

double sample_sigma_tilted(double beta, double theta, double eps, RngStream& rng) {
  if (!(eps > 0.0)) throw DomainError("sample_sigma: eps must be positive");
  double a_tilt = beta * theta * theta;
  for (;;) {
    double z = rng.gaussian();
    double s = eps / (z * z);
    if (s < eps) continue;  // proposal below the window
    double log_ratio = eps / (2.0 * s) - 0.5 - a_tilt * (s - eps);
    if (std::log(rng.uniform()) <= log_ratio) return s;
  }
}

double sample_sigma(const BranchingMechanism& m, RngStream& rng, double eps) {
  QuadraticView q = quadratic_view(m);
  if (!(q.theta > 0.0)) throw DomainError("sample_sigma: needs a subcritical quadratic");
  return sample_sigma_tilted(q.beta, q.theta, eps, rng);
}

double sample_sigma_acceptance(double beta, double theta, double eps) {
  double a = beta * theta * theta;
  double t = 2.0 / std::sqrt(eps) * std::exp(-a * eps);
  if (a > 0.0) t -= 2.0 * std::sqrt(a * M_PI) * std::erfc(std::sqrt(a * eps));
  return t * std::sqrt(eps / (2.0 * M_PI)) * std::exp(a * eps - 0.5);
}

namespace {

struct ForestAccumulator {
  bool build_tree;
  double step;
  std::vector<double> cur;  // current excursion values (with leading zero)
  std::vector<std::pair<WTree, Location>> excursion_trees;
  ForestStats stats;
  std::vector<double> count_heights;

  void start_excursion() {
    if (build_tree) cur.assign(1, 0.0);
  }
  void push(double h) {
    if (build_tree) cur.push_back(h);
  }
  void end_excursion(double h_exc) {
    ++stats.excursions;
    for (std::size_t i = 0; i < count_heights.size(); ++i)
      if (h_exc > count_heights[i]) ++stats.exceed_counts[i];
    if (build_tree && cur.size() > 1) {
      cur.push_back(0.0);
      Excursion e{step, std::move(cur)};
      excursion_trees.push_back({from_excursion(e), Location{0, 0.0}});
      cur.clear();
    }
  }
};

}  // namespace

static TreeSample sample_forest_common(const BranchingMechanism& m, double x, double step,
                                       RngStream& rng, const ForestOptions& opts,
                                       bool build_tree, ForestStats* stats_out) {
  QuadraticView qv = quadratic_view(m);
  if (qv.theta < 0.0) throw DomainError("sample_forest: mechanism must be (sub)critical");
  if (!(x > 0.0)) throw DomainError("sample_forest: x must be positive");
  if (!(step > 0.0) || step > opts.max_step)
    throw StepTooCoarseError("sample_forest: step above the configured maximum");

  const double drift = -2.0 * qv.beta * qv.theta * step;
  const double vol = std::sqrt(2.0 * qv.beta * step);
  const double inv_beta = 1.0 / qv.beta;
  const double cap_h = opts.height_cap;

  // Gaussian increments come from a dedicated counter-based stream keyed by a
  // nonce drawn from the caller's stream, so repeated calls stay independent
  // and reproducible.
  simd::GaussStream gauss(rng.seed(), rng.next_u64());

  ForestAccumulator acc;
  acc.build_tree = build_tree;
  acc.step = step;
  acc.count_heights = opts.count_heights;
  acc.stats.exceed_counts.assign(opts.count_heights.size(), 0);

  TreeSample out;
  out.theta = qv.theta;
  out.beta = qv.beta;
  out.step = step;
  out.x = x;

  double X = 0.0, I = 0.0;
  bool in_excursion = false;
  double h_exc = 0.0;
  uint64_t steps = 0;
  while (I > -x) {
    X += drift + vol * gauss.next();
    ++steps;
    if (X < I) I = X;
    double h = (X - I) * inv_beta;
    if (h > cap_h) {
      h = cap_h;
      X = I + cap_h * qv.beta;
      out.capped = true;
    }
    if (h > 0.0) {
      if (!in_excursion) {
        in_excursion = true;
        h_exc = 0.0;
        acc.start_excursion();
      }
      acc.push(h);
      h_exc = std::max(h_exc, h);
      out.h_max = std::max(out.h_max, h);
    } else if (in_excursion) {
      in_excursion = false;
      acc.end_excursion(h_exc);
    }
  }
  if (in_excursion) acc.end_excursion(h_exc);
  out.sigma = static_cast<double>(steps) * step;
  out.excursions = acc.stats.excursions;
  acc.stats.sigma = out.sigma;
  acc.stats.h_max = out.h_max;
  acc.stats.capped = out.capped;
  if (build_tree) {
    out.tree = graft(WTree(), acc.excursion_trees);
    out.has_tree = true;
  }
  if (stats_out) *stats_out = std::move(acc.stats);
  return out;
}

TreeSample sample_forest(const BranchingMechanism& m, double x, double step, RngStream& rng,
                         const ForestOptions& opts) {
  return sample_forest_common(m, x, step, rng, opts, opts.build_tree, nullptr);
}

ForestStats sample_forest_stats(const BranchingMechanism& m, double x, double step,
                                RngStream& rng, const ForestOptions& opts) {
  ForestStats stats;
  sample_forest_common(m, x, step, rng, opts, false, &stats);
  return stats;
}

std::vector<double> sample_csbp(const BranchingMechanism& m, double z0,
                                const std::vector<double>& grid, RngStream& rng) {
  QuadraticView qv = quadratic_view(m);
  if (z0 < 0.0) throw DomainError("sample_csbp: z0 must be >= 0");
  std::vector<double> out;
  out.reserve(grid.size());
  double t_prev = 0.0, z = z0;
  for (double t : grid) {
    double delta = t - t_prev;
    if (!(delta > 0.0)) throw DomainError("sample_csbp: grid must be increasing");
    t_prev = t;
    if (z > 0.0) {
      double e = 2.0 * qv.beta * qv.theta * delta;
      double c = qv.theta != 0.0 ? -std::expm1(-e) / (2.0 * qv.theta) : qv.beta * delta;
      uint64_t n = rng.poisson(z * std::exp(-e) / c);
      z = n == 0 ? 0.0 : c * rng.gamma(static_cast<double>(n));
    }
    out.push_back(z);
  }
  return out;
}

double graft_infinite_weight(const BranchingMechanism& m, double q) {
  QuadraticView qv = quadratic_view(m);
  if (std::fabs(qv.theta) > 1e-12)
    throw DomainError("graft_infinite_weight: base mechanism must be critical");
  return q < 0.0 ? 2.0 * qv.beta * (m.theta_bar(q) - q) : 0.0;
}

std::vector<double> brownian_excursion(double s, std::size_t m, RngStream& rng) {
  if (m < 2) m = 2;
  std::vector<double> b1(m + 1, 0.0), b2(m + 1, 0.0), b3(m + 1, 0.0);
  const double dt = s / static_cast<double>(m);
  auto bridge = [&](std::vector<double>& b) {
    for (std::size_t k = 0; k + 1 < m; ++k) {
      double remain = s - k * dt;
      double mean = b[k] * (remain - dt) / remain;
      double var = dt * (remain - dt) / remain;
      b[k + 1] = mean + std::sqrt(var) * rng.gaussian();
    }
  };
  bridge(b1);
  bridge(b2);
  bridge(b3);
  std::vector<double> e(m + 1, 0.0);
  for (std::size_t k = 1; k < m; ++k)
    e[k] = std::sqrt(b1[k] * b1[k] + b2[k] * b2[k] + b3[k] * b3[k]);
  return e;
}

GraftSample sample_graft_path(const BranchingMechanism& m, double q, double eps, double step,
                              RngStream& rng) {
  QuadraticView qv = quadratic_view(m);
  if (std::fabs(qv.theta) > 1e-12)
    throw DomainError("sample_graft: base mechanism must be critical");
  if (!m.member(q)) throw DomainError("sample_graft: q outside the window");
  GraftSample out;
  double w_inf = q < 0.0 ? 2.0 * qv.beta * (-2.0 * q) : 0.0;  // 2 beta (q_bar - q)
  double w_fin = 2.0 * qv.beta * sigma_tail_mass(qv.beta, q, eps);
  if (w_inf > 0.0 && rng.uniform() * (w_inf + w_fin) < w_inf) {
    out.infinite = true;
    out.sigma = kInf;
    out.h_max = kInf;
    return out;
  }
  // finite part: conjugate subcritical law; for the quadratic family the
  // sigma-law tilt depends on q^2 only and the path given sigma is a scaled
  // Brownian excursion
  double s = sample_sigma_tilted(qv.beta, q, eps, rng);
  std::size_t intervals = std::max<std::size_t>(2, static_cast<std::size_t>(s / step));
  std::vector<double> e = brownian_excursion(s, intervals, rng);
  double scale = std::sqrt(2.0 / qv.beta);
  double hmax = 0.0;
  for (double& v : e) {
    v *= scale;
    hmax = std::max(hmax, v);
  }
  out.sigma = s;
  out.h_max = hmax;
  out.path.step = s / static_cast<double>(intervals);
  out.path.values = std::move(e);
  return out;
}

TreeSample sample_graft(const BranchingMechanism& m, double q, double eps, double step,
                        RngStream& rng) {
  GraftSample g = sample_graft_path(m, q, eps, step, rng);
  TreeSample out;
  QuadraticView qv = quadratic_view(m);
  out.beta = qv.beta;
  out.theta = q;
  out.step = step;
  out.eps = eps;
  if (g.infinite) {
    out.infinite = true;
    out.tree = WTree::infinite_sentinel();
    out.sigma = kInf;
    out.h_max = kInf;
    return out;
  }
  out.tree = from_excursion(g.path);
  out.has_tree = true;
  out.sigma = out.tree.sigma();
  out.h_max = g.h_max;
  return out;
}

}  // namespace levytree
