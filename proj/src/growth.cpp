#include "levytree/growth.hpp"

#include <algorithm>
#include <cmath>

#include "levytree/errors.hpp"
#include "levytree/numeric.hpp"

namespace levytree {

namespace {

// Rate of mass lost to sub-eps grafts per unit backward time and unit mass:
// 2 beta int_0^eps s n_q(ds) = erf(|q| sqrt(beta eps)) / |q|.
double missing_mass_rate(double beta, double q, double eps) {
  double aq = std::fabs(q);
  if (aq < 1e-12) return 2.0 * std::sqrt(beta * eps / M_PI);
  return std::erf(aq * std::sqrt(beta * eps)) / aq;
}

// Growth factor of the compensation drift over [q_lo, q_hi] (Simpson).
double compensation_factor(double beta, double q_lo, double q_hi, double eps) {
  double mid = 0.5 * (q_lo + q_hi);
  double integral = (q_hi - q_lo) / 6.0 *
                    (missing_mass_rate(beta, q_lo, eps) + 4.0 * missing_mass_rate(beta, mid, eps) +
                     missing_mass_rate(beta, q_hi, eps));
  return std::exp(integral);
}

// bold-N mass of {sigma >= eps} u {sigma = inf} at backward time q.
double event_rate_per_mass(double beta, double q, double eps) {
  double fin = 2.0 * beta * sigma_tail_mass(beta, q, eps);
  double inf_part = q < 0.0 ? 4.0 * beta * (-q) : 0.0;
  return fin + inf_part;
}

// Envelope over the window [lo, hi] (per unit mass): the finite part grows as
// |q| shrinks, the infinite part as q becomes more negative.
double event_rate_envelope(double beta, double lo, double hi, double eps) {
  double qmin_abs = (lo <= 0.0 && hi >= 0.0) ? 0.0 : std::min(std::fabs(lo), std::fabs(hi));
  double fin = 2.0 * beta * sigma_tail_mass(beta, qmin_abs, eps);
  double inf_part = lo < 0.0 ? 4.0 * beta * (-lo) : 0.0;
  return fin + inf_part;
}

struct TreeState {
  // flat mass-measure representation of the growing tree
  std::vector<double> heights;
  std::vector<double> cum;
  double hmax = 0.0;

  void push(double h, double w) {
    heights.push_back(h);
    cum.push_back((cum.empty() ? 0.0 : cum.back()) + w);
  }
  double draw_height(RngStream& rng) const {
    double u = rng.uniform() * cum.back();
    std::size_t i = std::lower_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (i >= heights.size()) i = heights.size() - 1;
    return heights[i];
  }
};

struct GrowCore {
  const BranchingMechanism& m;
  QuadraticView qv;
  const GrowOptions& opts;
  RngStream& rng;
  GrowthTrajectory traj;
  TreeState* tree = nullptr;  // nullptr for mass-only growth

  GrowCore(const BranchingMechanism& m_, const GrowOptions& o, RngStream& r)
      : m(m_), qv(quadratic_view(m_)), opts(o), rng(r) {
    if (std::fabs(qv.theta) > 1e-12)
      throw DomainError("grow: base mechanism must be the critical quadratic");
    if (!(o.eps > 0.0)) throw DomainError("grow: eps must be positive");
  }

  void mark_exit_crossings(double q, double hmax_new) {
    for (auto& rec : traj.exit_times)
      if (!rec.a_h && hmax_new > rec.h) rec.a_h = q;
  }

  void finish_exits_at_ascension(double q) {
    for (auto& rec : traj.exit_times)
      if (!rec.a_h) rec.a_h = q;  // an infinite graft has infinite height
  }

  void run(double sigma_start, double theta_start, double theta_end) {
    if (!(theta_end < theta_start)) throw DomainError("grow: need theta_end < theta_start");
    if (!m.member(theta_end)) throw DomainError("grow: theta_end outside the window");
    traj.theta_start = theta_start;
    traj.theta_end = theta_end;
    traj.truncation_eps = opts.eps;
    traj.sigma_start = sigma_start;

    const double beta = qv.beta;
    double q = theta_start;
    double sigma = sigma_start;
    double hmax = tree ? tree->hmax : 0.0;
    mark_exit_crossings(q, hmax);  // seed may already exceed tracked levels
    for (auto& rec : traj.exit_times)
      if (rec.a_h && *rec.a_h == theta_start) rec.a_h = kInf;  // exceeded at the start

    if (sigma <= 0.0) {  // nothing to grow from
      traj.sigma_end = 0.0;
      traj.hmax_end = hmax;
      return;
    }

    long events = 0;
    while (q > theta_end) {
      double window = std::min(q - theta_end, 0.25);
      double lo = q - window;
      double comp_full = opts.compensate_mass ? compensation_factor(beta, lo, q, opts.eps) : 1.0;
      double env = sigma * comp_full * event_rate_envelope(beta, lo, q, opts.eps);
      double gap = rng.exponential(env);
      if (gap >= window) {
        if (opts.compensate_mass) {
          double add = sigma * (comp_full - 1.0);
          sigma += add;
          traj.compensation += add;
        }
        q = lo;
        continue;
      }
      double q_new = q - gap;
      if (opts.compensate_mass) {
        double f = compensation_factor(beta, q_new, q, opts.eps);
        double add = sigma * (f - 1.0);
        sigma += add;
        traj.compensation += add;
      }
      q = q_new;
      double rate = sigma * event_rate_per_mass(beta, q, opts.eps);
      if (rate > env * (1.0 + 1e-9))
        throw EnvelopeError("grow: thinning envelope violated");
      if (rng.uniform() * env > rate) continue;  // thinned
      if (++events > opts.max_events) throw EnvelopeError("grow: event budget exceeded");

      // accepted event: infinite with probability (rate_inf / rate)
      double rate_inf = q < 0.0 ? sigma * 4.0 * beta * (-q) : 0.0;
      if (rate_inf > 0.0 && rng.uniform() * rate < rate_inf) {
        traj.ascension = q;
        finish_exits_at_ascension(q);
        traj.events.push_back({q, true, kNaN, kInf, kNaN, sigma, kInf, kInf});
        return;
      }
      GrowthEvent ev{q, false, kNaN, 0.0, kNaN, sigma, 0.0, hmax};
      if (tree) {
        GraftSample g = sample_graft_path(m, q, opts.eps, opts.step, rng);
        // finite by construction here (the infinite branch was taken above)
        double hx = tree->draw_height(rng);
        ev.x_height = hx;
        ev.sigma = g.sigma;
        ev.h = g.h_max;
        // append the graft's interval-midpoint atoms
        const auto& vals = g.path.values;
        for (std::size_t k = 0; k + 1 < vals.size(); ++k)
          tree->push(hx + 0.5 * (vals[k] + vals[k + 1]), g.path.step);
        tree->hmax = std::max(tree->hmax, hx + g.h_max);
        hmax = tree->hmax;
        sigma += g.path.step * (vals.size() - 1);
        mark_exit_crossings(q, hmax);
      } else {
        ev.sigma = sample_sigma_tilted(beta, q, opts.eps, rng);
        sigma += ev.sigma;
      }
      ev.sigma_after = sigma;
      ev.hmax_after = hmax;
      traj.events.push_back(ev);

      if (q < 0.0 && sigma > opts.sigma_cap) {
        // the infinite-graft rate 4 beta |q| sigma makes explosion immediate
        traj.ascension = q;
        traj.ascension_by_cap = true;
        finish_exits_at_ascension(q);
        return;
      }
    }
    traj.sigma_end = sigma;
    traj.hmax_end = hmax;
  }
};

}  // namespace

GrowthTrajectory grow_mass(const BranchingMechanism& m, double sigma_start, double theta_start,
                           double theta_end, RngStream& rng, const GrowOptions& opts) {
  GrowCore core(m, opts, rng);
  if (!opts.track_heights.empty())
    throw DomainError("grow_mass: exit tracking requires grow_tree");
  core.run(sigma_start, theta_start, theta_end);
  return std::move(core.traj);
}

GrowthTrajectory grow_tree(const BranchingMechanism& m, const WTree& seed, double theta_start,
                           double theta_end, RngStream& rng, const GrowOptions& opts) {
  GrowCore core(m, opts, rng);
  TreeState state;
  for (const auto& a : seed.atoms()) {
    double h = a.edge == 0 ? 0.0 : seed.node_height(seed.parent(a.edge)) + a.offset;
    state.push(h, a.weight);
  }
  state.hmax = seed.h_max();
  core.tree = &state;
  for (double h : opts.track_heights) core.traj.exit_times.push_back({h, std::nullopt});
  core.run(seed.sigma(), theta_start, theta_end);
  return std::move(core.traj);
}

ExitSpineSample sample_exit_spine(const BranchingMechanism& m, double theta, double h,
                                  RngStream& rng, const SpineOptions& opts) {
  QuadraticView qv = quadratic_view(m);
  if (std::fabs(qv.theta) > 1e-12)
    throw DomainError("sample_exit_spine: base mechanism must be the critical quadratic");
  if (!m.member(theta)) throw DomainError("sample_exit_spine: theta outside the window");
  const double beta = qv.beta;
  ExtinctionProfile prof(m, theta, h);
  const double dpsi_theta = m.eval(theta, 1);  // psi'(theta) = 2 beta theta

  // Gamma(t) is strictly increasing with effectively infinite range at t->h.
  double gamma_max = prof.gamma_int(prof.t_cut());
  auto gamma_inverse = [&](double target) {
    double lo = 0.0, hi = prof.t_cut();
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      if (prof.gamma_int(mid) < target) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  long budget = opts.rejection_budget;
  // spine height: density f weighted by e^{-psi'(theta) t}
  double weight_cap = std::max(1.0, std::exp(-dpsi_theta * h));
  double hx = 0.0;
  for (;;) {
    if (budget-- <= 0) throw RejectionBudgetError("sample_exit_spine: spine rejection budget");
    double target = -std::log(rng.uniform());
    if (target >= gamma_max) continue;  // numerically truncated upper tail
    double t = gamma_inverse(target);
    if (rng.uniform() * weight_cap <= std::exp(-dpsi_theta * t)) {
      hx = t;
      break;
    }
  }

  // spine sub-trees: Poisson with intensity 2 beta (theta + b_h(a))
  // N^{psi_theta}[dT, H_max < h - a], realized by thinning sigma>=eps grafts
  // on their height. Cumulative intensity R(a) = tail * (2 beta theta a +
  // Gamma(a)) since gamma_theta(l) = 2 beta l for the quadratic family.
  double tail = sigma_tail_mass(beta, theta, opts.eps);
  auto cum_rate = [&](double a) {
    return tail * (2.0 * beta * theta * a + prof.gamma_int(a));
  };
  auto cum_rate_inverse = [&](double target, double lo_init) {
    double lo = lo_init, hi = std::min(hx, prof.t_cut());
    for (int it = 0; it < 80; ++it) {
      double mid = 0.5 * (lo + hi);
      if (cum_rate(mid) < target) lo = mid;
      else hi = mid;
    }
    return 0.5 * (lo + hi);
  };

  // spine as a chain tree; grafts attached by location
  std::vector<std::pair<double, GraftSample>> spine_grafts;
  double a_cur = 0.0;
  double r_cur = cum_rate(0.0);
  double r_end = cum_rate(std::min(hx, prof.t_cut()));
  for (;;) {
    r_cur += rng.exponential(1.0);
    if (r_cur >= r_end) break;
    a_cur = cum_rate_inverse(r_cur, a_cur);
    if (a_cur >= hx) break;
    if (budget-- <= 0) throw RejectionBudgetError("sample_exit_spine: graft budget");
    // conditioned subcritical graft, thinned on height
    double s = sample_sigma_tilted(beta, theta, opts.eps, rng);
    std::size_t intervals = std::max<std::size_t>(2, static_cast<std::size_t>(s / opts.step));
    std::vector<double> path = brownian_excursion(s, intervals, rng);
    double scale = std::sqrt(2.0 / beta);
    double hmax_g = 0.0;
    for (double& v : path) {
      v *= scale;
      hmax_g = std::max(hmax_g, v);
    }
    if (hmax_g >= h - a_cur) continue;  // height-conditioning rejection
    GraftSample g;
    g.sigma = s;
    g.h_max = hmax_g;
    g.path.step = s / static_cast<double>(intervals);
    g.path.values = std::move(path);
    spine_grafts.push_back({a_cur, g});
  }

  // overshoot: bold-N^{psi_theta} conditioned on H_max > h - hx
  double gap = h - hx;
  double s_floor = std::min(opts.eps, beta * gap * gap / 20.0);
  TreeSample overshoot;
  overshoot.beta = beta;
  overshoot.theta = theta;
  overshoot.step = opts.step;
  for (;;) {
    if (budget-- <= 0)
      throw RejectionBudgetError("sample_exit_spine: overshoot rejection budget (gap " +
                                 std::to_string(gap) + ")");
    double s = sample_sigma_tilted(beta, theta, s_floor, rng);
    std::size_t intervals = std::max<std::size_t>(2, static_cast<std::size_t>(s / opts.step));
    std::vector<double> path = brownian_excursion(s, intervals, rng);
    double scale = std::sqrt(2.0 / beta);
    double hmax_g = 0.0;
    for (double& v : path) {
      v *= scale;
      hmax_g = std::max(hmax_g, v);
    }
    if (hmax_g <= gap) continue;
    Excursion e{s / static_cast<double>(intervals), std::move(path)};
    overshoot.tree = from_excursion(e);
    overshoot.has_tree = true;
    overshoot.sigma = overshoot.tree.sigma();
    overshoot.h_max = hmax_g;
    break;
  }

  // assemble T_{A_h}: a spine of height hx with the kept grafts
  WTree spine;
  NodeId tip = spine.add_node(0, hx);
  spine.finalize();
  std::vector<std::pair<WTree, Location>> glist;
  for (auto& [a, g] : spine_grafts)
    glist.push_back({from_excursion(g.path), Location{tip, a}});
  WTree before = graft(spine, glist);
  WTree after = graft(before, {{overshoot.tree, Location{tip, hx}}});

  ExitSpineSample out;
  out.spine_height = hx;
  out.tree_before = std::move(before);
  out.tree_after = std::move(after);
  out.overshoot = std::move(overshoot);
  out.spine_grafts = static_cast<int>(glist.size());
  return out;
}

}  // namespace levytree
