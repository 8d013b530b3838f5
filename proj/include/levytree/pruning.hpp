#pragma once

#include <iosfwd>
#include <map>
#include <vector>

#include "levytree/rng.hpp"
#include "levytree/wtree.hpp"

namespace levytree {

// Two-type Poisson marks on a w-tree: skeleton marks with intensity
// 2 beta l(dx) dtheta, node marks with intensity Delta_y per infinite node.
struct MarkMeasure {
  struct SkeletonMark {
    Location where;
    double theta;
  };
  std::vector<SkeletonMark> skeleton;
  std::map<NodeId, std::vector<double>> node;  // sorted theta lists
  double theta_max = 0.0;

  void save(std::ostream& out) const;  // appended to the wtree format
  static MarkMeasure load(std::istream& in);
};

MarkMeasure sample_marks(const WTree& t, double beta, double theta_max, RngStream& rng);

// Lambda_theta: root component of points with no mark of level <= theta
// strictly below them.
WTree prune_at(const WTree& t, const MarkMeasure& marks, double theta);

struct GraftRecord {
  Location where;  // attach point in the pruned tree
  WTree tree;
  double theta;    // record-mark level
};

struct Decomposition {
  WTree pruned;
  std::vector<GraftRecord> grafts;
  // surviving-mark bookkeeping for the cocycle property: marks with level
  // > theta located in the pruned tree, levels shifted down by theta
  MarkMeasure residual_marks;
};

Decomposition decompose(const WTree& t, const MarkMeasure& marks, double theta);

}  // namespace levytree
