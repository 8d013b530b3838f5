#include "levytree/pruning.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "levytree/errors.hpp"
#include "levytree/numeric.hpp"

namespace levytree {

namespace {

void write_double(std::ostream& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

}  // namespace

void MarkMeasure::save(std::ostream& out) const {
  out << "# theta_max ";
  write_double(out, theta_max);
  out << '\n';
  for (const auto& m : skeleton) {
    out << "mark ske " << m.where.edge << ' ';
    write_double(out, m.where.offset);
    out << ' ';
    write_double(out, m.theta);
    out << '\n';
  }
  for (const auto& [v, thetas] : node)
    for (double th : thetas) {
      out << "mark nod " << v << ' ';
      write_double(out, th);
      out << '\n';
    }
}

MarkMeasure MarkMeasure::load(std::istream& in) {
  MarkMeasure m;
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("# theta_max", 0) == 0) {
      m.theta_max = std::stod(line.substr(11));
      continue;
    }
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind, sub;
    ls >> kind >> sub;
    if (kind != "mark") continue;
    if (sub == "ske") {
      long edge;
      double off, th;
      ls >> edge >> off >> th;
      m.skeleton.push_back({{static_cast<NodeId>(edge), off}, th});
      m.theta_max = std::max(m.theta_max, th);
    } else if (sub == "nod") {
      long v;
      double th;
      ls >> v >> th;
      m.node[static_cast<NodeId>(v)].push_back(th);
      m.theta_max = std::max(m.theta_max, th);
    } else {
      throw IoError("marks: unknown record 'mark " + sub + "'");
    }
  }
  for (auto& [v, thetas] : m.node) std::sort(thetas.begin(), thetas.end());
  return m;
}

MarkMeasure sample_marks(const WTree& t, double beta, double theta_max, RngStream& rng) {
  if (!(theta_max > 0.0)) throw DomainError("sample_marks: theta_max must be positive");
  if (beta < 0.0) throw DomainError("sample_marks: beta must be >= 0");
  t.summary();
  MarkMeasure marks;
  marks.theta_max = theta_max;
  // skeleton marks: Poisson(2 beta L theta_max), uniform on skeleton x [0, theta_max]
  std::vector<double> cum(t.node_count(), 0.0);
  double total = 0.0;
  for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v) {
    total += t.edge_length(v);
    cum[v] = total;
  }
  if (beta > 0.0 && total > 0.0) {
    uint64_t n = rng.poisson(2.0 * beta * total * theta_max);
    marks.skeleton.reserve(n);
    for (uint64_t i = 0; i < n; ++i) {
      double u = rng.uniform() * total;
      NodeId e = static_cast<NodeId>(
          std::lower_bound(cum.begin() + 1, cum.end(), u) - cum.begin());
      double off;
      do {
        off = rng.uniform() * t.edge_length(e);
      } while (off <= 0.0 || off >= t.edge_length(e));  // open-segment sampling
      marks.skeleton.push_back({{e, off}, rng.uniform() * theta_max});
    }
  }
  // node marks on infinite nodes
  for (auto& [v, delta] : t.node_masses()) {
    uint64_t n = rng.poisson(delta * theta_max);
    auto& list = marks.node[v];
    for (uint64_t i = 0; i < n; ++i) list.push_back(rng.uniform() * theta_max);
    std::sort(list.begin(), list.end());
    if (list.empty()) marks.node.erase(v);
  }
  return marks;
}

namespace {

struct PruneWork {
  const WTree& t;
  const MarkMeasure& marks;
  double theta;
  bool build_grafts;

  // lowest qualifying skeleton cut per edge (offset, theta), +inf if none
  std::vector<double> cut_off;
  std::vector<double> cut_theta;
  // min qualifying node-mark level per node, +inf if none
  std::vector<double> node_cut;

  std::vector<NodeId> node_map;   // source node -> pruned node
  std::vector<NodeId> cut_leaf;   // source edge with skeleton cut -> pruned leaf
  std::vector<char> in_pruned;    // source edge fully kept

  Decomposition out;

  PruneWork(const WTree& t_, const MarkMeasure& m_, double th, bool g)
      : t(t_), marks(m_), theta(th), build_grafts(g) {
    std::size_t n = t.node_count();
    cut_off.assign(n, kInf);
    cut_theta.assign(n, kInf);
    node_cut.assign(n, kInf);
    node_map.assign(n, -1);
    cut_leaf.assign(n, -1);
    in_pruned.assign(n, 0);
    for (const auto& mk : marks.skeleton) {
      if (mk.theta > theta) continue;
      NodeId e = mk.where.edge;
      if (mk.where.offset < cut_off[e] ||
          (mk.where.offset == cut_off[e] && mk.theta < cut_theta[e])) {
        cut_off[e] = mk.where.offset;
        cut_theta[e] = mk.theta;
      }
    }
    for (const auto& [v, list] : marks.node)
      for (double th2 : list)
        if (th2 <= theta) {
          node_cut[v] = th2;  // sorted: first qualifying is minimal
          break;
        }
  }

  WTree build_graft_skeleton_cut(NodeId e, double off) {
    // component strictly above the cut point on edge e, rooted at the cut
    WTree g;
    std::vector<NodeId> gmap(t.node_count(), -1);
    NodeId top = g.add_node(0, t.edge_length(e) - off);
    gmap[e] = top;
    collect_subtree(g, gmap, e);
    for (auto& [v, delta] : t.node_masses())
      if (gmap[v] >= 0) g.add_node_mass(gmap[v], delta);
    copy_atoms_from(g, gmap, e, off);
    return g;
  }

  WTree build_graft_node_cut(NodeId v) {
    WTree g;
    std::vector<NodeId> gmap(t.node_count(), -1);
    gmap[v] = 0;
    double dv = t.node_mass(v);
    if (dv > 0.0) g.add_node_mass(0, dv);
    collect_subtree(g, gmap, v);
    for (auto& [u, delta] : t.node_masses())
      if (gmap[u] > 0) g.add_node_mass(gmap[u], delta);
    copy_atoms_from(g, gmap, v, kInf);
    return g;
  }

  void collect_subtree(WTree& g, std::vector<NodeId>& gmap, NodeId root) {
    // nodes are parent-before-child ordered globally
    for (NodeId v = root + 1; v < static_cast<NodeId>(t.node_count()); ++v) {
      NodeId p = t.parent(v);
      if (gmap[p] >= 0) gmap[v] = g.add_node(gmap[p], t.edge_length(v));
    }
  }

  void copy_atoms_from(WTree& g, const std::vector<NodeId>& gmap, NodeId cut_edge,
                       double cut_offset) {
    for (const auto& a : t.atoms()) {
      if (a.edge == cut_edge && cut_offset != kInf) {
        if (a.offset > cut_offset) g.add_atom(gmap[a.edge], a.offset - cut_offset, a.weight);
      } else if (a.edge != cut_edge && gmap[a.edge] >= 0) {
        g.add_atom(gmap[a.edge], a.offset, a.weight);
      }
    }
    g.finalize();
  }

  void run() {
    WTree& pruned = out.pruned;
    node_map[0] = 0;
    in_pruned[0] = 1;
    for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v) {
      NodeId p = t.parent(v);
      if (node_map[p] < 0 || !in_pruned[p]) continue;  // ancestor already cut
      if (node_cut[p] < kInf) continue;                // parent node is a cut point
      double len = t.edge_length(v);
      if (cut_off[v] < len) {
        cut_leaf[v] = pruned.add_node(node_map[p], cut_off[v]);
        if (build_grafts)
          out.grafts.push_back(
              {Location{cut_leaf[v], cut_off[v]}, build_graft_skeleton_cut(v, cut_off[v]),
               cut_theta[v]});
      } else {
        node_map[v] = pruned.add_node(node_map[p], len);
        in_pruned[v] = 1;
        if (node_cut[v] < kInf && build_grafts)
          out.grafts.push_back(
              {Location{node_map[v], len}, build_graft_node_cut(v), node_cut[v]});
      }
    }
    // root node cut: everything except the root goes
    if (node_cut[0] < kInf && build_grafts)
      out.grafts.insert(out.grafts.begin(),
                        {Location{0, 0.0}, build_graft_node_cut(0), node_cut[0]});

    for (const auto& a : t.atoms()) {
      if (a.edge == 0) {
        pruned.add_atom(0, 0.0, a.weight);  // the root always survives
        continue;
      }
      if (node_map[a.edge] >= 0 && in_pruned[a.edge]) {
        pruned.add_atom(node_map[a.edge], a.offset, a.weight);
      } else if (cut_leaf[a.edge] >= 0 && a.offset <= cut_off[a.edge]) {
        pruned.add_atom(cut_leaf[a.edge], a.offset, a.weight);
      }
    }
    // node masses: a node-cut node hands its Delta to the graft root
    for (auto& [v, delta] : t.node_masses())
      if (node_map[v] >= 0 && in_pruned[v] && node_cut[v] == kInf)
        pruned.add_node_mass(node_map[v], delta);
    pruned.finalize();

    // residual marks (levels shifted by theta) for the cocycle property
    MarkMeasure& res = out.residual_marks;
    res.theta_max = std::max(0.0, marks.theta_max - theta);
    for (const auto& mk : marks.skeleton) {
      if (mk.theta <= theta) continue;
      NodeId e = mk.where.edge;
      NodeId host = -1;
      if (node_map[e] >= 0 && in_pruned[e]) host = node_map[e];
      else if (cut_leaf[e] >= 0 && mk.where.offset < cut_off[e]) host = cut_leaf[e];
      if (host >= 0) res.skeleton.push_back({{host, mk.where.offset}, mk.theta - theta});
    }
    for (const auto& [v, list] : marks.node) {
      if (node_map[v] < 0 || !in_pruned[v]) continue;
      std::vector<double> kept;
      for (double th2 : list)
        if (th2 > theta) kept.push_back(th2 - theta);
      if (!kept.empty()) res.node[node_map[v]] = std::move(kept);
    }
  }
};

}  // namespace

WTree prune_at(const WTree& t, const MarkMeasure& marks, double theta) {
  if (theta < 0.0 || theta > marks.theta_max + 1e-12)
    throw RangeError("prune_at: theta outside the sampled range");
  t.summary();
  PruneWork work(t, marks, theta, false);
  work.run();
  return std::move(work.out.pruned);
}

Decomposition decompose(const WTree& t, const MarkMeasure& marks, double theta) {
  if (theta < 0.0 || theta > marks.theta_max + 1e-12)
    throw RangeError("decompose: theta outside the sampled range");
  t.summary();
  PruneWork work(t, marks, theta, true);
  work.run();
  return std::move(work.out);
}

}  // namespace levytree
