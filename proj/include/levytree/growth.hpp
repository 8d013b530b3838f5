#pragma once

#include <optional>
#include <vector>

#include "levytree/mechanism.hpp"
#include "levytree/rng.hpp"
#include "levytree/sampler.hpp"
#include "levytree/wtree.hpp"

namespace levytree {

struct GrowthEvent {
  double theta;
  bool infinite;
  double x_height;     // attach height (NaN in mass-only runs)
  double sigma;        // graft mass (inf for the infinite event)
  double h;            // graft height (NaN in mass-only runs)
  double sigma_before; // total mass at theta (before the backward jump)
  double sigma_after;  // total mass just below theta
  double hmax_after;
};

struct ExitRecord {
  double h;
  // A_h: the backward time the height first exceeded h. +inf when the seed
  // already exceeds h at theta_start; nullopt when never crossed by theta_end.
  std::optional<double> a_h;
};

struct GrowthTrajectory {
  double theta_start = 0.0;
  double theta_end = 0.0;
  double truncation_eps = 0.0;
  double sigma_start = 0.0;
  std::vector<GrowthEvent> events;
  std::optional<double> ascension;  // A
  bool ascension_by_cap = false;    // A declared via the sigma cap shortcut
  std::vector<ExitRecord> exit_times;
  double sigma_end = 0.0;  // mass at theta_end (finite trajectories)
  double hmax_end = 0.0;
  double compensation = 0.0;  // total deterministic sub-eps mass drift added
};

struct GrowOptions {
  double eps = 1e-4;
  // Adds the mean sub-eps graft mass as a deterministic drift between events
  // (first-order truncation-bias correction).
  bool compensate_mass = false;
  // Declare the ascension event once sigma exceeds this while q < 0 (the
  // infinite-graft rate 4 beta |q| sigma then makes explosion immediate).
  double sigma_cap = 1e7;
  double step = 1e-4;                  // graft path grid (grow_tree)
  std::vector<double> track_heights;   // exit levels A_h to record (grow_tree)
  long max_events = 200000000;
};

// Mass-only backward growth: graft events thinned against an analytic
// envelope; sizes from the conditioned quadratic mass law.
GrowthTrajectory grow_mass(const BranchingMechanism& m, double sigma_start, double theta_start,
                           double theta_end, RngStream& rng, const GrowOptions& opts = {});

// Full geometric growth from a seed tree: attach points drawn from the mass
// measure, graft paths from the conjugate excursion law; tracks H_max and the
// requested exit times.
GrowthTrajectory grow_tree(const BranchingMechanism& m, const WTree& seed, double theta_start,
                           double theta_end, RngStream& rng, const GrowOptions& opts = {});

// Spinal sample of the tree at the exit time A_h = theta (quadratic):
// spine height from the reweighted density, subtrees from the
// height-conditioned Poisson intensity, plus the overshooting graft.
struct ExitSpineSample {
  double spine_height;
  WTree tree_before;       // T_{A_h}
  WTree tree_after;        // T_{A_h-} = T_{A_h} (*) overshoot
  TreeSample overshoot;
  int spine_grafts = 0;
};

struct SpineOptions {
  double eps = 1e-4;
  double step = 1e-4;
  long rejection_budget = 200000;
};

ExitSpineSample sample_exit_spine(const BranchingMechanism& m, double theta, double h,
                                  RngStream& rng, const SpineOptions& opts = {});

}  // namespace levytree
