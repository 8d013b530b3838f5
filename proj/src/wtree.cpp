#include "levytree/wtree.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

#include "levytree/errors.hpp"

namespace levytree {

namespace {

void write_double(std::ostream& out, double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  out.write(buf, res.ptr - buf);
}

double read_double(const std::string& tok) {
  double v;
  auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (res.ec != std::errc() || res.ptr != tok.data() + tok.size())
    throw IoError("wtree: bad number '" + tok + "'");
  return v;
}

}  // namespace

WTree::WTree() {
  parent_.push_back(-1);
  edge_length_.push_back(0.0);
  finalize();
}

WTree WTree::infinite_sentinel() {
  WTree t;
  t.infinite_ = true;
  return t;
}

void WTree::check_not_infinite() const {
  if (infinite_) throw InfiniteTreeError("operation on the infinite-tree sentinel");
}

void WTree::check_finalized() const {
  if (!finalized_) throw DomainError("wtree: not finalized");
}

NodeId WTree::add_node(NodeId parent, double edge_length) {
  if (parent < 0 || parent >= static_cast<NodeId>(parent_.size()))
    throw InvalidLocationError("add_node: bad parent");
  if (!(edge_length > 0.0)) throw DomainError("add_node: edge length must be positive");
  parent_.push_back(parent);
  edge_length_.push_back(edge_length);
  finalized_ = false;
  return static_cast<NodeId>(parent_.size()) - 1;
}

void WTree::add_atom(NodeId edge, double offset, double weight) {
  if (weight < 0.0) throw DomainError("add_atom: negative weight");
  atoms_.push_back({edge, offset, weight});
  finalized_ = false;
}

void WTree::add_node_mass(NodeId node, double delta) {
  if (delta < 0.0) throw DomainError("add_node_mass: negative mass");
  node_masses_.emplace_back(node, delta);
  finalized_ = false;
}

void WTree::finalize() {
  std::size_t n = parent_.size();
  height_.assign(n, 0.0);
  children_.assign(n, {});
  for (NodeId v = 1; v < static_cast<NodeId>(n); ++v) {
    if (parent_[v] < 0 || parent_[v] >= v)
      throw DomainError("wtree: parents must precede children");
    height_[v] = height_[parent_[v]] + edge_length_[v];
    children_[parent_[v]].push_back(v);
  }
  subtree_hmax_ = height_;
  for (NodeId v = static_cast<NodeId>(n) - 1; v > 0; --v)
    subtree_hmax_[parent_[v]] = std::max(subtree_hmax_[parent_[v]], subtree_hmax_[v]);
  atom_cum_.resize(atoms_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < atoms_.size(); ++i) {
    Atom& a = atoms_[i];
    if (a.edge < 0 || a.edge >= static_cast<NodeId>(n))
      throw InvalidLocationError("wtree: atom on unknown edge");
    double len = edge_length_[a.edge];
    double slack = 1e-9 * (len + 1.0);
    if (a.offset < -slack || a.offset > len + slack)
      throw InvalidLocationError("wtree: atom offset outside its edge");
    a.offset = std::min(std::max(a.offset, 0.0), len);
    acc += a.weight;
    atom_cum_[i] = acc;
  }
  finalized_ = true;
}

double WTree::node_mass(NodeId v) const {
  double d = 0.0;
  for (auto& [node, delta] : node_masses_)
    if (node == v) d += delta;
  return d;
}

bool WTree::valid_location(const Location& x) const {
  if (x.edge < 0 || x.edge >= static_cast<NodeId>(parent_.size())) return false;
  if (x.edge == 0) return x.offset == 0.0;
  return x.offset >= 0.0 && x.offset <= edge_length_[x.edge] + 1e-12;
}

double WTree::height_of(const Location& x) const {
  check_finalized();
  if (!valid_location(x)) throw InvalidLocationError("height_of: bad location");
  if (x.edge == 0) return 0.0;
  return height_[parent_[x.edge]] + std::min(x.offset, edge_length_[x.edge]);
}

TreeSummary WTree::summary() const {
  check_not_infinite();
  check_finalized();
  double sig = atom_cum_.empty() ? 0.0 : atom_cum_.back();
  double hmax = subtree_hmax_.empty() ? 0.0 : subtree_hmax_[0];
  double len = std::accumulate(edge_length_.begin(), edge_length_.end(), 0.0);
  return {sig, hmax, len};
}

double WTree::sigma() const {
  check_not_infinite();
  return atom_cum_.empty() ? 0.0 : atom_cum_.back();
}

double WTree::h_max() const {
  check_not_infinite();
  return subtree_hmax_.empty() ? 0.0 : subtree_hmax_[0];
}

double WTree::total_length() const { return summary().total_length; }

Location WTree::sample_leaf(RngStream& rng) const {
  check_not_infinite();
  check_finalized();
  double total = atom_cum_.empty() ? 0.0 : atom_cum_.back();
  if (!(total > 0.0)) throw ZeroMassError("sample_leaf: tree has zero mass");
  double u = rng.uniform() * total;
  std::size_t lo = std::lower_bound(atom_cum_.begin(), atom_cum_.end(), u) - atom_cum_.begin();
  if (lo >= atoms_.size()) lo = atoms_.size() - 1;
  return {atoms_[lo].edge, atoms_[lo].offset};
}

// ---------------------------------------------------------------------------
// from_excursion

namespace {

WTree from_excursion_impl(const Excursion& f, std::vector<Location>* interval_locs) {
  f.validate();
  const std::vector<double>& v = f.values;
  const std::size_t n = v.size() - 1;  // sample intervals
  double vmax = 0.0;
  for (double x : v) vmax = std::max(vmax, x);
  const double tol = 1e-12 * std::max(1.0, vmax);
  if (interval_locs) interval_locs->assign(n, Location{0, 0.0});

  // Mutable node pool; parent links may be rewired when a later minimum
  // splits an edge, so ids are renumbered at the end.
  struct BNode {
    int parent;
    double h;
  };
  std::vector<BNode> pool{{-1, 0.0}};
  struct StackEntry {
    int node;
    double h;
  };
  std::vector<StackEntry> stack{{0, 0.0}};

  using AtomRef = std::pair<double, std::size_t>;     // (midpoint height, interval)
  std::vector<std::vector<AtomRef>> leaf_atoms;       // per leaf
  std::vector<int> leaf_node;                         // pool id per leaf
  std::vector<AtomRef> climb_buffer;

  bool climbing = true;
  int cur_leaf = -1;
  for (std::size_t k = 0; k < n; ++k) {
    double a = v[k], b = v[k + 1];
    AtomRef mid{0.5 * (a + b), k};
    bool positive = std::max(a, b) > tol;
    if (b > a + tol) {  // up-step
      if (!climbing) {
        // local minimum at height a
        int child = -1;
        while (stack.back().h > a + tol) {
          child = stack.back().node;
          stack.pop_back();
        }
        if (std::fabs(stack.back().h - a) > tol) {
          // split: new branch node between stack top and the popped child
          pool.push_back({stack.back().node, a});
          int branch = static_cast<int>(pool.size()) - 1;
          if (child >= 0) pool[child].parent = branch;
          stack.push_back({branch, a});
        }
        climbing = true;
      }
      if (positive) climb_buffer.push_back(mid);
    } else if (a > b + tol) {  // down-step
      if (climbing) {
        // local maximum at height a: a new leaf above the stack top
        pool.push_back({stack.back().node, a});
        int leaf = static_cast<int>(pool.size()) - 1;
        stack.push_back({leaf, a});
        leaf_node.push_back(leaf);
        leaf_atoms.emplace_back(std::move(climb_buffer));
        climb_buffer.clear();
        cur_leaf = static_cast<int>(leaf_node.size()) - 1;
        climbing = false;
      }
      if (positive) leaf_atoms[cur_leaf].push_back(mid);
    } else {  // flat within tolerance
      if (positive) {
        if (cur_leaf >= 0 && !climbing) leaf_atoms[cur_leaf].push_back(mid);
        else climb_buffer.push_back(mid);
      }
      // zero stretches carry no mass: sigma counts positive intervals only
    }
  }
  if (!climb_buffer.empty() && cur_leaf >= 0)
    leaf_atoms[cur_leaf].insert(leaf_atoms[cur_leaf].end(), climb_buffer.begin(),
                                climb_buffer.end());

  // Renumber by height (strictly increasing along edges).
  std::vector<int> order(pool.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int x, int y) {
    if (pool[x].h != pool[y].h) return pool[x].h < pool[y].h;
    return x < y;
  });
  std::vector<NodeId> renum(pool.size(), -1);
  WTree t;
  for (int id : order) {
    if (id == 0) {
      renum[0] = 0;
      continue;
    }
    int p = pool[id].parent;
    renum[id] = t.add_node(renum[p], pool[id].h - pool[p].h);
  }
  t.finalize();

  // Resolve atoms along each leaf's ancestor chain, highest first.
  for (std::size_t li = 0; li < leaf_node.size(); ++li) {
    auto& hs = leaf_atoms[li];
    std::sort(hs.begin(), hs.end(),
              [](const AtomRef& x, const AtomRef& y) { return x.first > y.first; });
    NodeId c = renum[leaf_node[li]];
    for (auto& [h, k] : hs) {
      while (c != 0 && t.node_height(t.parent(c)) >= h) c = t.parent(c);
      Location loc{0, 0.0};
      if (c != 0 && h > 0.0) loc = {c, h - t.node_height(t.parent(c))};
      t.add_atom(loc.edge, loc.offset, f.step);
      if (interval_locs) (*interval_locs)[k] = loc;
    }
  }
  t.finalize();
  return t;
}

}  // namespace

WTree from_excursion(const Excursion& f) { return from_excursion_impl(f, nullptr); }

WTree from_excursion_with_locations(const Excursion& f, std::vector<Location>& locs) {
  return from_excursion_impl(f, &locs);
}

// ---------------------------------------------------------------------------

Location mrca(const WTree& t, const Location& x, const Location& y) {
  if (!t.valid_location(x) || !t.valid_location(y))
    throw InvalidLocationError("mrca: bad location");
  if (x.edge == y.edge) return x.offset <= y.offset ? x : y;
  NodeId a = x.edge, b = y.edge;
  while (a != b) {
    if (t.node_height(a) >= t.node_height(b)) a = t.parent(a);
    else b = t.parent(b);
  }
  if (a == x.edge) return x;  // x lies on y's root path
  if (a == y.edge) return y;
  return Location{a, a == 0 ? 0.0 : t.edge_length(a)};
}

double dist(const WTree& t, const Location& x, const Location& y) {
  Location z = mrca(t, x, y);
  return t.height_of(x) + t.height_of(y) - 2.0 * t.height_of(z);
}

WTree truncate(const WTree& t, double a) {
  if (a < 0.0) throw DomainError("truncate: negative level");
  t.summary();  // sentinel / finalization guard
  WTree out;
  std::vector<NodeId> node_map(t.node_count(), -1);
  node_map[0] = 0;
  std::vector<NodeId> clip_leaf(t.node_count(), -1);
  for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v) {
    NodeId p = t.parent(v);
    if (node_map[p] < 0) continue;
    double hp = t.node_height(p), hv = t.node_height(v);
    if (hv <= a) node_map[v] = out.add_node(node_map[p], t.edge_length(v));
    else if (hp < a) clip_leaf[v] = out.add_node(node_map[p], a - hp);
  }
  for (const auto& atom : t.atoms()) {
    if (atom.edge == 0) {
      out.add_atom(0, 0.0, atom.weight);
      continue;
    }
    double h = t.node_height(t.parent(atom.edge)) + atom.offset;
    if (h > a) continue;
    if (node_map[atom.edge] >= 0) out.add_atom(node_map[atom.edge], atom.offset, atom.weight);
    else if (clip_leaf[atom.edge] >= 0) out.add_atom(clip_leaf[atom.edge], atom.offset, atom.weight);
  }
  for (auto& [v, delta] : t.node_masses())
    if (node_map[v] >= 0) out.add_node_mass(node_map[v], delta);
  out.finalize();
  return out;
}

WTree graft(const WTree& t, const std::vector<std::pair<WTree, Location>>& grafts) {
  t.summary();
  for (auto& [g, x] : grafts) {
    g.summary();
    if (!t.valid_location(x)) throw InvalidLocationError("graft: bad attach point");
  }
  WTree out;
  std::vector<NodeId> node_map(t.node_count(), -1);
  node_map[0] = 0;

  std::vector<std::vector<std::pair<double, int>>> splits(t.node_count());
  for (int i = 0; i < static_cast<int>(grafts.size()); ++i) {
    const Location& x = grafts[i].second;
    if (x.edge != 0) splits[x.edge].push_back({std::min(x.offset, t.edge_length(x.edge)), i});
  }
  for (auto& s : splits) std::sort(s.begin(), s.end());

  std::vector<NodeId> attach(grafts.size(), 0);  // root by default
  struct Segment {
    double end;   // offset (from the source parent endpoint) where it ends
    NodeId node;  // child endpoint in the output tree
  };
  std::vector<std::vector<Segment>> segments(t.node_count());

  for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v) {
    NodeId cur = node_map[t.parent(v)];
    double prev_off = 0.0;
    double len = t.edge_length(v);
    for (auto& [off, gi] : splits[v]) {
      if (off <= 0.0) {
        attach[gi] = cur;
      } else if (off < len) {
        if (off > prev_off) {
          cur = out.add_node(cur, off - prev_off);
          segments[v].push_back({off, cur});
          prev_off = off;
        }
        attach[gi] = cur;
      } else {
        attach[gi] = -2 - v;  // at node v; resolved once node_map[v] exists
      }
    }
    node_map[v] = out.add_node(cur, len - prev_off);
    segments[v].push_back({len, node_map[v]});
  }
  for (auto& a : attach)
    if (a < -1) a = node_map[-2 - a];

  for (const auto& atom : t.atoms()) {
    if (atom.edge == 0) {
      out.add_atom(0, 0.0, atom.weight);
      continue;
    }
    double start = 0.0;
    for (const Segment& seg : segments[atom.edge]) {
      if (atom.offset <= seg.end || &seg == &segments[atom.edge].back()) {
        out.add_atom(seg.node, atom.offset - start, atom.weight);
        break;
      }
      start = seg.end;
    }
  }
  for (auto& [v, delta] : t.node_masses()) out.add_node_mass(node_map[v], delta);

  for (std::size_t i = 0; i < grafts.size(); ++i) {
    const WTree& g = grafts[i].first;
    std::vector<NodeId> gmap(g.node_count(), -1);
    gmap[0] = attach[i];
    for (NodeId v = 1; v < static_cast<NodeId>(g.node_count()); ++v)
      gmap[v] = out.add_node(gmap[g.parent(v)], g.edge_length(v));
    for (const auto& atom : g.atoms()) {
      if (atom.edge == 0) {
        NodeId host = attach[i];
        if (host == 0) out.add_atom(0, 0.0, atom.weight);
        else out.add_atom(host, out.edge_length(host), atom.weight);
      } else {
        out.add_atom(gmap[atom.edge], atom.offset, atom.weight);
      }
    }
    for (auto& [v, delta] : g.node_masses()) out.add_node_mass(gmap[v], delta);
  }
  out.finalize();
  return out;
}

LevelCounts level_counts(const WTree& t, double a, double eps, double b_eps) {
  if (!(eps > 0.0)) throw DomainError("level_counts: eps must be positive");
  if (!(b_eps > 0.0)) throw DomainError("level_counts: b_eps must be positive");
  t.summary();
  int n = 0;
  for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v) {
    double hp = t.node_height(t.parent(v));
    double hv = t.node_height(v);
    if (hp <= a && hv > a && t.subtree_height(v) >= a + eps) ++n;
  }
  return {n, n / b_eps};
}

// ---------------------------------------------------------------------------
// io

void WTree::save(std::ostream& out) const {
  check_not_infinite();
  check_finalized();
  out << "wtree v1\n";
  for (NodeId v = 1; v < static_cast<NodeId>(parent_.size()); ++v) {
    out << "node " << v << ' ';
    if (parent_[v] == 0) out << '-';
    else out << parent_[v];
    out << ' ';
    write_double(out, edge_length_[v]);
    out << '\n';
  }
  for (const Atom& a : atoms_) {
    out << "atom " << a.edge << ' ';
    write_double(out, a.offset);
    out << ' ';
    write_double(out, a.weight);
    out << '\n';
  }
  for (auto& [v, d] : node_masses_) {
    out << "delta " << v << ' ';
    write_double(out, d);
    out << '\n';
  }
}

WTree WTree::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "wtree v1") throw IoError("wtree: missing header");
  WTree t;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string kind;
    ls >> kind;
    if (kind == "node") {
      std::string id_s, parent_s, len_s;
      if (!(ls >> id_s >> parent_s >> len_s)) throw IoError("wtree: bad node line");
      NodeId id = static_cast<NodeId>(std::stol(id_s));
      NodeId p = parent_s == "-" ? 0 : static_cast<NodeId>(std::stol(parent_s));
      if (id != static_cast<NodeId>(t.parent_.size()))
        throw IoError("wtree: nodes must be listed in id order");
      t.add_node(p, read_double(len_s));
    } else if (kind == "atom") {
      std::string e_s, off_s, w_s;
      if (!(ls >> e_s >> off_s >> w_s)) throw IoError("wtree: bad atom line");
      t.add_atom(static_cast<NodeId>(std::stol(e_s)), read_double(off_s), read_double(w_s));
    } else if (kind == "delta") {
      std::string v_s, d_s;
      if (!(ls >> v_s >> d_s)) throw IoError("wtree: bad delta line");
      t.add_node_mass(static_cast<NodeId>(std::stol(v_s)), read_double(d_s));
    } else if (kind == "mark") {
      continue;  // pruning marks share the file; parsed by the pruning module
    } else {
      throw IoError("wtree: unknown record '" + kind + "'");
    }
  }
  t.finalize();
  return t;
}

std::string WTree::canonical_signature(double tol) const {
  check_not_infinite();
  check_finalized();
  auto q = [tol](double v) { return static_cast<long long>(std::llround(v / tol)); };
  std::vector<std::vector<std::pair<long long, long long>>> atoms_of(node_count());
  for (const Atom& a : atoms_) atoms_of[a.edge].push_back({q(a.offset), q(a.weight)});
  for (auto& va : atoms_of) std::sort(va.begin(), va.end());
  std::vector<long long> delta_of(node_count(), 0);
  for (auto& [v, d] : node_masses_) delta_of[v] += q(d);

  std::vector<std::string> sig(node_count());
  for (NodeId v = static_cast<NodeId>(node_count()) - 1; v >= 0; --v) {
    std::vector<std::string> child_sigs;
    for (NodeId c : children_[v]) child_sigs.push_back(sig[c]);
    std::sort(child_sigs.begin(), child_sigs.end());
    std::ostringstream os;
    os << "(L" << (v == 0 ? 0 : q(edge_length_[v])) << ";D" << delta_of[v] << ";A";
    for (auto& [o, w] : atoms_of[v]) os << o << ':' << w << ',';
    os << ";C";
    for (auto& s : child_sigs) os << s;
    os << ')';
    sig[v] = os.str();
  }
  return sig[0];
}

}  // namespace levytree
