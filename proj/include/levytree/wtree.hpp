#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "levytree/excursion.hpp"
#include "levytree/rng.hpp"

namespace levytree {

using NodeId = int32_t;

// A point on the skeleton: `edge` names the child endpoint of the edge, and
// `offset` is measured from the parent endpoint. The root is {0, 0}.
struct Location {
  NodeId edge = 0;
  double offset = 0.0;
};

struct TreeSummary {
  double sigma;
  double h_max;
  double total_length;
};

// Finite rooted weighted real tree. Node 0 is the root; every other node has
// a parent and a positive edge length. The mass measure is purely atomic.
// Immutable once finalized; operations return new trees.
class WTree {
 public:
  struct Atom {
    NodeId edge;
    double offset;
    double weight;
  };

  WTree();  // single-root tree, no mass

  static WTree infinite_sentinel();
  bool is_infinite() const { return infinite_; }

  // Construction interface (used by builders; call finalize() when done).
  NodeId add_node(NodeId parent, double edge_length);
  void add_atom(NodeId edge, double offset, double weight);
  void add_node_mass(NodeId node, double delta);
  void finalize();

  std::size_t node_count() const { return parent_.size(); }
  NodeId parent(NodeId v) const { return parent_[v]; }
  double edge_length(NodeId v) const { return edge_length_[v]; }
  double node_height(NodeId v) const { return height_[v]; }
  double subtree_height(NodeId v) const { return subtree_hmax_[v]; }
  const std::vector<NodeId>& children(NodeId v) const { return children_[v]; }
  const std::vector<Atom>& atoms() const { return atoms_; }
  const std::vector<std::pair<NodeId, double>>& node_masses() const { return node_masses_; }
  double node_mass(NodeId v) const;

  bool valid_location(const Location& x) const;
  double height_of(const Location& x) const;

  TreeSummary summary() const;
  double sigma() const;
  double h_max() const;
  double total_length() const;

  // Mass-weighted draw among atoms; ZeroMassError when sigma == 0.
  Location sample_leaf(RngStream& rng) const;

  void save(std::ostream& out) const;
  static WTree load(std::istream& in);

  // Canonical structural signature; trees are GHP-isometric (up to `tol` on
  // lengths/weights) iff signatures match.
  std::string canonical_signature(double tol = 1e-9) const;

 private:
  void check_finalized() const;
  void check_not_infinite() const;

  bool infinite_ = false;
  bool finalized_ = false;
  std::vector<NodeId> parent_;
  std::vector<double> edge_length_;
  std::vector<Atom> atoms_;
  std::vector<std::pair<NodeId, double>> node_masses_;

  // derived on finalize()
  std::vector<double> height_;
  std::vector<double> subtree_hmax_;
  std::vector<std::vector<NodeId>> children_;
  std::vector<double> atom_cum_;

  friend class WTreeBuilderAccess;
};

// Tree coded by the piecewise-linear excursion: internal nodes at strict
// local minima, leaves at local maxima, one mass atom of weight `step` per
// positive sample interval.
WTree from_excursion(const Excursion& f);

// Variant reporting the tree location of every sample interval's midpoint
// image p^f(t); zero stretches map to the root.
WTree from_excursion_with_locations(const Excursion& f, std::vector<Location>& locs);

double dist(const WTree& t, const Location& x, const Location& y);
Location mrca(const WTree& t, const Location& x, const Location& y);

// pi_a: points of height <= a; crossing edges get a new leaf at height a.
WTree truncate(const WTree& t, double a);

// T (*) (T_i, x_i): graft roots identified with the attach points.
WTree graft(const WTree& t, const std::vector<std::pair<WTree, Location>>& grafts);

struct LevelCounts {
  int n;
  double z_estimate;
};
// Components of {height > a} whose height exceeds a by >= eps; z = n / b_eps.
LevelCounts level_counts(const WTree& t, double a, double eps, double b_eps);

}  // namespace levytree
