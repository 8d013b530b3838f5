#pragma once

#include <optional>
#include <vector>

#include "levytree/wtree.hpp"

namespace levytree {

// Finite relation between two trees; projections are expected to cover the
// declared nets of both sides (the evaluators account for leftover coverage
// explicitly), and the root pair must be present.
struct Correspondence {
  std::vector<std::pair<Location, Location>> pairs;
};

// sup over pairs of pairs of |d_X - d_Y|.
double distortion(const WTree& x, const WTree& y, const Correspondence& r);

enum class GhpMode { exact_small, upper };

struct GhpOptions {
  int exact_limit = 8;           // max nodes+atoms per tree in exact_small
  long search_budget = 50000000; // B&B node budget for exact_small
  const Correspondence* hint = nullptr;  // extra upper-mode candidate
  // When the hint aligns equal-weight atoms pairwise (shared excursion time
  // grid), the Prohorov term may use the coupling bound dis/2 + |sigma
  // difference| instead of an exact computation.
  bool hint_mass_aligned = false;
};

struct GhpResult {
  double value;
  double net_resolution;
};

// d_GHP^c upper bound / small-instance exact minimizer. The value is the sum
// d_H + d_root + d_P evaluated in the correspondence glue space.
GhpResult dghp_compact(const WTree& x, const WTree& y, GhpMode mode, const GhpOptions& opts = {});

// Integrated distance: int_0^inf e^{-r} (1 ^ d^c(x^(r), y^(r))) dr, quadrature
// between the finitely many restriction breakpoints.
double dghp_full(const WTree& x, const WTree& y, const GhpOptions& opts = {});

// Exact Prohorov distance between atomic measures on a finite metric space
// given as a distance matrix; masses[i] live at point i.
double prohorov_atomic(const std::vector<double>& dist_matrix, std::size_t n,
                       const std::vector<double>& mass_x, const std::vector<double>& mass_y);

// Time-grid correspondence of Prop. cont-TH between two excursion-coded
// trees; mass-aligned by construction.
Correspondence excursion_correspondence(const Excursion& f, const std::vector<Location>& fx,
                                        const Excursion& g, const std::vector<Location>& gx);

}  // namespace levytree
