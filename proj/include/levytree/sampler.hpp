#pragma once

#include <optional>
#include <vector>

#include "levytree/excursion.hpp"
#include "levytree/mechanism.hpp"
#include "levytree/rng.hpp"
#include "levytree/wtree.hpp"

namespace levytree {

// Quadratic mechanisms psi_theta(l) = beta l^2 + 2 beta theta l are the only
// ones with exact samplers; this view extracts (beta, theta) or throws.
struct QuadraticView {
  double beta;
  double theta;
};
QuadraticView quadratic_view(const BranchingMechanism& m);

// Mass calculus of the quadratic excursion measure N^{psi_theta}:
// n(ds) = s^{-3/2} e^{-beta theta^2 s} ds / (2 sqrt(pi beta)).
double sigma_tail_mass(double beta, double theta, double s);     // N[sigma >= s]
double sigma_partial_mean(double beta, double theta, double s);  // int_0^s u n(du)
// Rejection sampler for n restricted to [eps, inf), normalized.
double sample_sigma(const BranchingMechanism& m, RngStream& rng, double eps = 1e-4);
double sample_sigma_tilted(double beta, double theta, double eps, RngStream& rng);
// Analytic acceptance probability of that sampler (oracle for rate tests).
double sample_sigma_acceptance(double beta, double theta, double eps);

struct TreeSample {
  WTree tree;
  bool has_tree = false;
  bool infinite = false;
  double sigma = 0.0;
  double h_max = 0.0;
  bool capped = false;
  int excursions = 0;
  // meta
  double theta = 0.0, beta = 0.0, step = 0.0, x = 0.0, eps = 0.0;
};

struct ForestOptions {
  double height_cap = kInf;  // clamp the height path; sets `capped`
  bool build_tree = true;
  double max_step = 1e-2;
  std::vector<double> count_heights;  // tally excursions exceeding these
};

// Forest of a (sub)critical quadratic mechanism from initial mass x: height
// path H = (X - I)/beta on the grid, X a drifted scaled Brownian path,
// stopped at tau_x.
TreeSample sample_forest(const BranchingMechanism& m, double x, double step, RngStream& rng,
                         const ForestOptions& opts = {});

struct ForestStats {
  double sigma = 0.0;  // tau_x
  double h_max = 0.0;
  bool capped = false;
  int excursions = 0;
  std::vector<int> exceed_counts;
};
ForestStats sample_forest_stats(const BranchingMechanism& m, double x, double step,
                                RngStream& rng, const ForestOptions& opts = {});

// Exact-in-law CSBP transitions of the quadratic mechanism at the given
// times (start value z0 at time 0; times strictly increasing).
std::vector<double> sample_csbp(const BranchingMechanism& m, double z0,
                                const std::vector<double>& grid, RngStream& rng);

// One atom of bold-N^{psi_q} = 2 beta N^{psi_q} restricted to
// {sigma >= eps} u {sigma = inf}: infinite with relative weight
// (q_bar - q) 1{q<0}; the finite part is the conjugate subcritical tree.
struct GraftSample {
  bool infinite = false;
  double sigma = 0.0;
  double h_max = 0.0;
  Excursion path;  // height path of the finite part (empty when infinite)
};
GraftSample sample_graft_path(const BranchingMechanism& m, double q, double eps, double step,
                              RngStream& rng);
TreeSample sample_graft(const BranchingMechanism& m, double q, double eps, double step,
                        RngStream& rng);

// Infinite-mass weight of bold-N^{psi_q}: 2 beta (q_bar - q) for q < 0.
double graft_infinite_weight(const BranchingMechanism& m, double q);

// Brownian excursion of duration s on m intervals via the 3d Bessel bridge;
// exact in law at the grid points.
std::vector<double> brownian_excursion(double s, std::size_t m, RngStream& rng);

}  // namespace levytree
