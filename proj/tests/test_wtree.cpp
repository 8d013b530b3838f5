#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "levytree/errors.hpp"
#include "levytree/rng.hpp"
#include "levytree/wtree.hpp"

using namespace levytree;

namespace {

Excursion tent(double step) {
  // f(t) = min(t, 2-t) on [0,2]
  Excursion f;
  f.step = step;
  std::size_t n = static_cast<std::size_t>(std::llround(2.0 / step));
  for (std::size_t k = 0; k <= n; ++k) {
    double t = k * step;
    f.values.push_back(std::min(t, 2.0 - t));
  }
  return f;
}

Excursion random_excursion(RngStream& rng, std::size_t n, double step) {
  // reflected Gaussian bridge
  Excursion f;
  f.step = step;
  std::vector<double> w(n + 1, 0.0);
  for (std::size_t k = 1; k <= n; ++k) w[k] = w[k - 1] + rng.gaussian() * std::sqrt(step);
  for (std::size_t k = 0; k <= n; ++k) {
    double bridge = w[k] - w[n] * (static_cast<double>(k) / n);
    f.values.push_back(std::fabs(bridge));
  }
  f.values.front() = f.values.back() = 0.0;
  return f;
}

}  // namespace

TEST_CASE("tent excursion codes a segment") {
  WTree t = from_excursion(tent(1e-3));
  TreeSummary s = t.summary();
  CHECK(s.sigma == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.h_max == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(s.total_length == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(t.node_count() == 2);  // root + single leaf
}

TEST_CASE("trivial excursion gives a bare root") {
  Excursion f{1.0, {0.0, 0.0}};
  WTree t = from_excursion(f);
  CHECK(t.node_count() == 1);
  CHECK(t.sigma() == 0.0);
  CHECK(t.h_max() == 0.0);
  Excursion bad{1.0, {0.0}};
  CHECK_THROWS_AS(from_excursion(bad), EmptyExcursionError);
}

TEST_CASE("two-peak excursion branches at the inner minimum") {
  Excursion f{0.25, {0.0, 1.0, 2.0, 1.0, 0.5, 1.0, 1.5, 1.0, 0.0}};
  WTree t = from_excursion(f);
  CHECK(t.node_count() == 4);  // root, branch at 0.5, two leaves
  CHECK(t.h_max() == doctest::Approx(2.0));
  CHECK(t.total_length() == doctest::Approx(0.5 + 1.5 + 1.0));
  CHECK(t.sigma() == doctest::Approx(8 * 0.25));
}

TEST_CASE("dist and mrca") {
  Excursion f{0.25, {0.0, 1.0, 2.0, 1.0, 0.5, 1.0, 1.5, 1.0, 0.0}};
  WTree t = from_excursion(f);
  NodeId leaf_a = -1, leaf_b = -1;
  for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v) {
    if (t.children(v).empty()) {
      if (t.node_height(v) == doctest::Approx(2.0)) leaf_a = v;
      if (t.node_height(v) == doctest::Approx(1.5)) leaf_b = v;
    }
  }
  REQUIRE(leaf_a > 0);
  REQUIRE(leaf_b > 0);
  Location a{leaf_a, t.edge_length(leaf_a)};
  Location b{leaf_b, t.edge_length(leaf_b)};
  CHECK(dist(t, a, a) == doctest::Approx(0.0));
  CHECK(dist(t, a, b) == doctest::Approx((2.0 - 0.5) + (1.5 - 0.5)));
  Location m = mrca(t, a, b);
  CHECK(t.height_of(m) == doctest::Approx(0.5));
  Location root{0, 0.0};
  CHECK(dist(t, root, a) == doctest::Approx(2.0));
  CHECK_THROWS_AS(dist(t, Location{99, 0.0}, a), InvalidLocationError);
}

TEST_CASE("four point condition on random excursion trees") {
  RngStream rng(11, 0);
  for (int rep = 0; rep < 20; ++rep) {
    WTree t = from_excursion(random_excursion(rng, 60, 0.05));
    if (t.atoms().size() < 4) continue;
    for (int trial = 0; trial < 40; ++trial) {
      auto pick = [&]() {
        const auto& a = t.atoms()[static_cast<std::size_t>(rng.uniform() * t.atoms().size())];
        return Location{a.edge, a.offset};
      };
      Location x1 = pick(), x2 = pick(), x3 = pick(), x4 = pick();
      double lhs = dist(t, x1, x2) + dist(t, x3, x4);
      double rhs =
          std::max(dist(t, x1, x3) + dist(t, x2, x4), dist(t, x1, x4) + dist(t, x2, x3));
      CHECK(lhs <= rhs + 1e-12);
    }
  }
}

TEST_CASE("truncate") {
  WTree t = from_excursion(tent(1e-3));
  WTree same = truncate(t, 2.0);
  CHECK(same.summary().sigma == doctest::Approx(t.summary().sigma));
  CHECK(same.node_count() == t.node_count());

  WTree half = truncate(t, 0.5);
  CHECK(half.h_max() == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(half.sigma() == doctest::Approx(1.0).epsilon(1e-3));  // Leb{f <= 1/2} = 1
  CHECK(half.total_length() == doctest::Approx(0.5).epsilon(1e-9));

  double prev = 0.0;
  for (double a : {0.1, 0.3, 0.5, 0.8, 1.0}) {
    double s = truncate(t, a).sigma();
    CHECK(s >= prev);
    prev = s;
  }
  CHECK(prev == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("graft: mass additivity, heights, edge splitting") {
  WTree base;
  NodeId tip = base.add_node(0, 1.0);
  base.add_atom(tip, 1.0, 0.25);
  base.finalize();
  WTree arm;
  NodeId atip = arm.add_node(0, 2.0);
  arm.add_atom(atip, 2.0, 0.5);
  arm.finalize();

  WTree g = graft(base, {{arm, Location{tip, 0.5}}});
  CHECK(g.sigma() == doctest::Approx(base.sigma() + arm.sigma()));
  CHECK(g.h_max() == doctest::Approx(2.5));
  CHECK(g.total_length() == doctest::Approx(3.0));
  int deg2 = 0;
  for (NodeId v = 0; v < static_cast<NodeId>(g.node_count()); ++v)
    if (g.children(v).size() == 2) ++deg2;
  CHECK(deg2 == 1);

  WTree g2 = graft(base, {{arm, Location{0, 0.0}}, {arm, Location{tip, 1.0}}});
  CHECK(g2.sigma() == doctest::Approx(base.sigma() + 2.0 * arm.sigma()));
  CHECK(g2.h_max() == doctest::Approx(3.0));

  // root mass of a graft becomes an atom at the attach point
  WTree massy;
  massy.add_atom(0, 0.0, 0.75);
  massy.finalize();
  WTree g3 = graft(base, {{massy, Location{tip, 0.25}}});
  CHECK(g3.sigma() == doctest::Approx(base.sigma() + 0.75));
  CHECK(g3.h_max() == doctest::Approx(1.0));
  CHECK_THROWS_AS(graft(base, {{arm, Location{42, 0.0}}}), InvalidLocationError);
}

TEST_CASE("truncate and graft commute below the attach points") {
  RngStream rng(12, 0);
  WTree base = from_excursion(random_excursion(rng, 50, 0.05));
  WTree arm = from_excursion(random_excursion(rng, 30, 0.05));
  double b = 0.3 * base.h_max();
  Location at{0, 0.0};
  bool found = false;
  for (const auto& atom : base.atoms()) {
    if (atom.edge == 0) continue;
    double h = base.node_height(base.parent(atom.edge)) + atom.offset;
    if (h > b + 1e-9) {
      at = {atom.edge, atom.offset};
      found = true;
      break;
    }
  }
  REQUIRE(found);
  WTree grafted = graft(base, {{arm, at}});
  CHECK(truncate(grafted, b).canonical_signature() == truncate(base, b).canonical_signature());
}

TEST_CASE("sample_leaf follows the mass measure") {
  WTree t;
  NodeId e = t.add_node(0, 1.0);
  t.add_atom(e, 0.25, 1.0);
  t.add_atom(e, 0.75, 3.0);
  t.finalize();
  RngStream rng(13, 0);
  int hi = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i)
    if (t.sample_leaf(rng).offset > 0.5) ++hi;
  double p = static_cast<double>(hi) / n;
  double se = std::sqrt(0.75 * 0.25 / n);
  CHECK(std::fabs(p - 0.75) < 3.0 * se);

  WTree one;
  NodeId e1 = one.add_node(0, 1.0);
  one.add_atom(e1, 0.5, 2.0);
  one.finalize();
  for (int i = 0; i < 10; ++i) CHECK(one.sample_leaf(rng).offset == doctest::Approx(0.5));

  WTree empty;
  CHECK_THROWS_AS(empty.sample_leaf(rng), ZeroMassError);

  // E[H] on the tent tree: heights uniform on [0,1]
  WTree tentt = from_excursion(tent(1e-3));
  double acc = 0.0;
  for (int i = 0; i < n; ++i) acc += tentt.height_of(tentt.sample_leaf(rng));
  double mean = acc / n;
  CHECK(std::fabs(mean - 0.5) < 3.0 * 0.29 / std::sqrt(n));
}

TEST_CASE("level_counts") {
  WTree t = from_excursion(tent(1e-3));
  CHECK(level_counts(t, 0.5, 0.4, 1.0).n == 1);
  CHECK(level_counts(t, 1.5, 0.1, 1.0).n == 0);  // above H_max
  CHECK(level_counts(t, 0.5, 0.6, 1.0).n == 0);  // subtree only 0.5 higher
  Excursion f{0.25, {0.0, 1.0, 2.0, 1.0, 0.5, 1.0, 1.5, 1.0, 0.0}};
  WTree t2 = from_excursion(f);
  CHECK(level_counts(t2, 0.75, 0.5, 2.0).n == 2);
  CHECK(level_counts(t2, 0.75, 0.5, 2.0).z_estimate == doctest::Approx(1.0));
  CHECK(level_counts(t2, 0.75, 1.0, 2.0).n == 1);
  CHECK_THROWS_AS(level_counts(t2, 0.5, -1.0, 1.0), DomainError);
}

TEST_CASE("summary exactness and graft consistency") {
  WTree seg;
  seg.add_node(0, 2.0);
  seg.finalize();
  TreeSummary s = seg.summary();
  CHECK(s.sigma == 0.0);
  CHECK(s.h_max == 2.0);
  CHECK(s.total_length == 2.0);

  RngStream rng(14, 0);
  WTree a = from_excursion(random_excursion(rng, 40, 0.05));
  WTree b = from_excursion(random_excursion(rng, 40, 0.05));
  Location at = a.sample_leaf(rng);
  WTree g = graft(a, {{b, at}});
  TreeSummary sg = g.summary();
  CHECK(sg.sigma == doctest::Approx(a.sigma() + b.sigma()).epsilon(1e-12));
  CHECK(sg.total_length == doctest::Approx(a.total_length() + b.total_length()).epsilon(1e-12));
  CHECK(sg.h_max ==
        doctest::Approx(std::max(a.h_max(), a.height_of(at) + b.h_max())).epsilon(1e-12));
}

TEST_CASE("discrete co-area identity") {
  RngStream rng(15, 0);
  WTree t = from_excursion(random_excursion(rng, 200, 0.02));
  double hmax = t.h_max();
  int grid = 2000;
  double da = hmax / grid;
  double acc = 0.0;
  for (int i = 0; i < grid; ++i) {
    double a = (i + 0.5) * da;
    int crossings = 0;
    for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v)
      if (t.node_height(t.parent(v)) <= a && t.node_height(v) > a) ++crossings;
    acc += crossings * da;
  }
  CHECK(acc == doctest::Approx(t.total_length()).epsilon(0.01));
}

TEST_CASE("file format round trip is byte exact") {
  RngStream rng(16, 0);
  WTree t = from_excursion(random_excursion(rng, 80, 0.05));
  WTree t2;
  {
    std::stringstream ss;
    t.save(ss);
    t2 = WTree::load(ss);
  }
  std::stringstream s1, s2;
  t.save(s1);
  t2.save(s2);
  CHECK(s1.str() == s2.str());
  CHECK(t.canonical_signature() == t2.canonical_signature());
  WTree d;
  NodeId e = d.add_node(0, 1.0);
  d.add_node_mass(e, 0.7);
  d.finalize();
  std::stringstream ss;
  d.save(ss);
  WTree d2 = WTree::load(ss);
  CHECK(d2.node_mass(1) == doctest::Approx(0.7));
  std::stringstream bad("not a tree\n");
  CHECK_THROWS_AS(WTree::load(bad), IoError);
}

TEST_CASE("infinite sentinel refuses operations") {
  WTree inf = WTree::infinite_sentinel();
  CHECK(inf.is_infinite());
  CHECK_THROWS_AS(inf.summary(), InfiniteTreeError);
  CHECK_THROWS_AS(truncate(inf, 1.0), InfiniteTreeError);
  RngStream rng(1, 1);
  CHECK_THROWS_AS(inf.sample_leaf(rng), InfiniteTreeError);
  WTree base;
  CHECK_THROWS_AS(graft(base, {{inf, Location{0, 0.0}}}), InfiniteTreeError);
}
