#include "levytree/ghp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>

#include "levytree/errors.hpp"
#include "levytree/numeric.hpp"

namespace levytree {

namespace {

// O(1) location-pair distances via an Euler-tour LCA over the node set.
class TreeMetric {
 public:
  explicit TreeMetric(const WTree& t) : t_(t) {
    std::size_t n = t.node_count();
    first_.assign(n, -1);
    euler_.reserve(2 * n);
    depth_.reserve(2 * n);
    // iterative DFS
    std::vector<std::pair<NodeId, std::size_t>> stack{{0, 0}};
    while (!stack.empty()) {
      auto& [v, ci] = stack.back();
      if (first_[v] < 0) first_[v] = static_cast<int>(euler_.size());
      euler_.push_back(v);
      depth_.push_back(t.node_height(v));
      const auto& ch = t.children(v);
      if (ci < ch.size()) {
        NodeId c = ch[ci];
        ++ci;
        stack.push_back({c, 0});
      } else {
        stack.pop_back();
      }
    }
    // sparse table over depth_ (argmin)
    std::size_t m = euler_.size();
    int levels = 1;
    while ((1u << levels) <= m) ++levels;
    table_.assign(levels, std::vector<int>(m));
    for (std::size_t i = 0; i < m; ++i) table_[0][i] = static_cast<int>(i);
    for (int l = 1; l < levels; ++l) {
      std::size_t span = 1u << l;
      for (std::size_t i = 0; i + span <= m; ++i) {
        int a = table_[l - 1][i], b = table_[l - 1][i + span / 2];
        table_[l][i] = depth_[a] <= depth_[b] ? a : b;
      }
    }
  }

  NodeId lca(NodeId a, NodeId b) const {
    int i = first_[a], j = first_[b];
    if (i > j) std::swap(i, j);
    int l = 31 - __builtin_clz(j - i + 1);
    int x = table_[l][i], y = table_[l][j - (1 << l) + 1];
    return euler_[depth_[x] <= depth_[y] ? x : y];
  }

  double dist(const Location& x, const Location& y) const {
    if (x.edge == y.edge) return std::fabs(x.offset - y.offset);
    double hx = t_.height_of(x), hy = t_.height_of(y);
    NodeId m = lca(x.edge, y.edge);
    double hm;
    if (m == x.edge) hm = std::min(hx, hy);  // x on y's root path
    else if (m == y.edge) hm = std::min(hx, hy);
    else hm = t_.node_height(m);
    return hx + hy - 2.0 * hm;
  }

 private:
  const WTree& t_;
  std::vector<int> first_;
  std::vector<NodeId> euler_;
  std::vector<double> depth_;
  std::vector<std::vector<int>> table_;
};

struct Net {
  std::vector<Location> pts;
  std::vector<double> mass;  // atom mass carried by each net point
  std::vector<double> d;     // k x k distances
  std::vector<std::tuple<int, int, double>> gaps;  // consecutive on-edge segments
  double sigma = 0.0;
  std::size_t k = 0;
  double max_gap = 0.0;

  double dist(int i, int j) const { return d[i * k + j]; }
};

Net build_net(const WTree& t, bool midpoints) {
  Net net;
  // node points
  std::vector<int> node_pt(t.node_count(), -1);
  auto push = [&](const Location& loc, double mass) {
    net.pts.push_back(loc);
    net.mass.push_back(mass);
    return static_cast<int>(net.pts.size()) - 1;
  };
  node_pt[0] = push({0, 0.0}, 0.0);
  for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v)
    node_pt[v] = push({v, t.edge_length(v)}, 0.0);
  // on-edge points: atoms (mass-merged per location) and midpoints
  std::map<std::pair<NodeId, long long>, int> seen;  // (edge, offset quantum) -> pt
  auto on_edge = [&](NodeId e, double off, double mass) {
    if (e == 0 || off >= t.edge_length(e) - 1e-15) {
      int p = (e == 0) ? node_pt[0] : node_pt[e];
      net.mass[p] += mass;
      return;
    }
    if (off <= 1e-15) {
      net.mass[node_pt[t.parent(e)]] += mass;
      return;
    }
    long long qo = static_cast<long long>(std::llround(off * 1e13));
    auto [it, inserted] = seen.insert({{e, qo}, static_cast<int>(net.pts.size())});
    if (inserted) push({e, off}, mass);
    else net.mass[it->second] += mass;
  };
  for (const auto& a : t.atoms()) {
    on_edge(a.edge, a.edge == 0 ? 0.0 : a.offset, a.weight);
    net.sigma += a.weight;
  }
  if (midpoints)
    for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v)
      on_edge(v, 0.5 * t.edge_length(v), 0.0);

  net.k = net.pts.size();
  TreeMetric metric(t);
  net.d.resize(net.k * net.k);
  for (std::size_t i = 0; i < net.k; ++i) {
    net.d[i * net.k + i] = 0.0;
    for (std::size_t j = i + 1; j < net.k; ++j) {
      double v = metric.dist(net.pts[i], net.pts[j]);
      net.d[i * net.k + j] = v;
      net.d[j * net.k + i] = v;
    }
  }
  // consecutive segments along each edge (for the Lipschitz interior bound)
  std::vector<std::vector<std::pair<double, int>>> per_edge(t.node_count());
  for (std::size_t i = 0; i < net.k; ++i) {
    const Location& loc = net.pts[i];
    if (loc.edge != 0) per_edge[loc.edge].push_back({loc.offset, static_cast<int>(i)});
  }
  for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v) {
    auto& list = per_edge[v];
    std::sort(list.begin(), list.end());
    int prev_pt = node_pt[t.parent(v)];
    double prev_off = 0.0;
    for (auto& [off, pt] : list) {
      if (off - prev_off > 1e-15) {
        net.gaps.push_back({prev_pt, pt, off - prev_off});
        net.max_gap = std::max(net.max_gap, off - prev_off);
      }
      prev_pt = pt;
      prev_off = off;
    }
  }
  return net;
}

int net_index_of(const Net& net, const WTree& t, const Location& loc) {
  // nearest net point to an arbitrary location (used to map correspondence
  // hints onto net indices)
  TreeMetric metric(t);
  int best = 0;
  double bd = kInf;
  for (std::size_t i = 0; i < net.k; ++i) {
    double d = metric.dist(net.pts[i], loc);
    if (d < bd) {
      bd = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

using IndexPairs = std::vector<std::pair<int, int>>;

double pair_distortion(const Net& nx, const Net& ny, const IndexPairs& r) {
  double d = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i)
    for (std::size_t j = i; j < r.size(); ++j)
      d = std::max(d, std::fabs(nx.dist(r[i].first, r[j].first) -
                                ny.dist(r[i].second, r[j].second)));
  return d;
}

// sup over the full tree of the distance to the nearest correspondence
// endpoint: net values plus the 1-Lipschitz bound inside each segment.
double cover_sup(const Net& net, const std::vector<double>& f) {
  double sup = 0.0;
  for (double v : f) sup = std::max(sup, v);
  for (auto& [i, j, len] : net.gaps) sup = std::max(sup, 0.5 * (f[i] + f[j] + len));
  return sup;
}

double prohorov_in_glue(const Net& nx, const Net& ny, const IndexPairs& r, double half_dis) {
  std::vector<int> sx, sy;  // support indices
  for (std::size_t i = 0; i < nx.k; ++i)
    if (nx.mass[i] > 0.0) sx.push_back(static_cast<int>(i));
  for (std::size_t j = 0; j < ny.k; ++j)
    if (ny.mass[j] > 0.0) sy.push_back(static_cast<int>(j));
  if (sx.empty() && sy.empty()) return 0.0;
  std::size_t n = sx.size() + sy.size();
  std::vector<double> d(n * n, 0.0), mx(n, 0.0), my(n, 0.0);
  for (std::size_t a = 0; a < sx.size(); ++a) {
    mx[a] = nx.mass[sx[a]];
    for (std::size_t b = 0; b < sx.size(); ++b) d[a * n + b] = nx.dist(sx[a], sx[b]);
  }
  for (std::size_t a = 0; a < sy.size(); ++a) {
    my[sx.size() + a] = ny.mass[sy[a]];
    for (std::size_t b = 0; b < sy.size(); ++b)
      d[(sx.size() + a) * n + sx.size() + b] = ny.dist(sy[a], sy[b]);
  }
  for (std::size_t a = 0; a < sx.size(); ++a)
    for (std::size_t b = 0; b < sy.size(); ++b) {
      double best = kInf;
      for (auto& [xi, yi] : r)
        best = std::min(best, nx.dist(sx[a], xi) + half_dis + ny.dist(yi, sy[b]));
      d[a * n + sx.size() + b] = best;
      d[(sx.size() + b) * n + a] = best;
    }
  return prohorov_atomic(d, n, mx, my);
}

struct Candidate {
  IndexPairs pairs;
  bool mass_aligned = false;
};

double evaluate_upper(const Net& nx, const Net& ny, const Candidate& cand) {
  const IndexPairs& r = cand.pairs;
  double dis = pair_distortion(nx, ny, r);
  double half = 0.5 * dis;
  // d_root in the glue
  double droot = kInf;
  for (auto& [xi, yi] : r) droot = std::min(droot, nx.dist(0, xi) + half + ny.dist(yi, 0));
  // Hausdorff: half distortion + worst uncovered radius on either side
  std::vector<double> fx(nx.k, kInf), fy(ny.k, kInf);
  for (auto& [xi, yi] : r) {
    for (std::size_t i = 0; i < nx.k; ++i) fx[i] = std::min(fx[i], nx.dist(i, xi));
    for (std::size_t j = 0; j < ny.k; ++j) fy[j] = std::min(fy[j], ny.dist(j, yi));
  }
  double dh = half + std::max(cover_sup(nx, fx), cover_sup(ny, fy));
  // Prohorov
  double dp;
  std::size_t support = 0;
  for (double m : nx.mass) support += m > 0.0;
  std::size_t support_y = 0;
  for (double m : ny.mass) support_y += m > 0.0;
  if (support == 0 && support_y == 0) {
    dp = 0.0;
  } else if (support <= 9 && support_y <= 9) {
    dp = prohorov_in_glue(nx, ny, r, half);
  } else if (cand.mass_aligned) {
    dp = half + std::fabs(nx.sigma - ny.sigma);
  } else {
    dp = std::max(nx.sigma, ny.sigma);
  }
  return dh + droot + dp;
}

Candidate root_candidate() { return {{{0, 0}}, false}; }

Candidate greedy_candidate(const Net& nx, const Net& ny, const WTree& tx, const WTree& ty) {
  // pair by height rank: covers both sides
  Candidate c;
  c.pairs.push_back({0, 0});
  std::vector<std::pair<double, int>> hx, hy;
  TreeMetric mx(tx), my(ty);
  for (std::size_t i = 0; i < nx.k; ++i) hx.push_back({tx.height_of(nx.pts[i]), (int)i});
  for (std::size_t j = 0; j < ny.k; ++j) hy.push_back({ty.height_of(ny.pts[j]), (int)j});
  std::sort(hx.begin(), hx.end());
  std::sort(hy.begin(), hy.end());
  auto nearest = [](const std::vector<std::pair<double, int>>& v, double h) {
    auto it = std::lower_bound(v.begin(), v.end(), std::make_pair(h, -1));
    if (it == v.end()) return std::prev(it)->second;
    if (it == v.begin()) return it->second;
    return (it->first - h < h - std::prev(it)->first) ? it->second : std::prev(it)->second;
  };
  for (auto& [h, i] : hx) c.pairs.push_back({i, nearest(hy, h)});
  for (auto& [h, j] : hy) c.pairs.push_back({nearest(hx, h), j});
  return c;
}

}  // namespace

double distortion(const WTree& x, const WTree& y, const Correspondence& r) {
  if (r.pairs.empty()) throw EmptyCorrespondenceError("distortion: no pairs");
  TreeMetric mx(x), my(y);
  double d = 0.0;
  for (std::size_t i = 0; i < r.pairs.size(); ++i)
    for (std::size_t j = i; j < r.pairs.size(); ++j)
      d = std::max(d, std::fabs(mx.dist(r.pairs[i].first, r.pairs[j].first) -
                                my.dist(r.pairs[i].second, r.pairs[j].second)));
  return d;
}

double prohorov_atomic(const std::vector<double>& dist_matrix, std::size_t n,
                       const std::vector<double>& mass_x, const std::vector<double>& mass_y) {
  std::vector<int> sx, sy;
  double tot_x = 0.0, tot_y = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (mass_x[i] > 0.0) sx.push_back(static_cast<int>(i));
    if (mass_y[i] > 0.0) sy.push_back(static_cast<int>(i));
    tot_x += mass_x[i];
    tot_y += mass_y[i];
  }
  if (sx.empty() && sy.empty()) return 0.0;
  if (sx.size() > 20 || sy.size() > 20)
    throw SizeLimitError("prohorov_atomic: support too large for exact enumeration");
  double dmax = 0.0;
  for (double v : dist_matrix) dmax = std::max(dmax, v);

  auto ok_one_side = [&](const std::vector<int>& sa, const std::vector<double>& ma,
                         const std::vector<int>& sb, const std::vector<double>& mb, double eps) {
    std::size_t m = sa.size();
    for (std::size_t mask = 1; mask < (1u << m); ++mask) {
      double mu = 0.0;
      for (std::size_t i = 0; i < m; ++i)
        if (mask & (1u << i)) mu += ma[sa[i]];
      double nu = 0.0;
      for (int j : sb) {
        double dj = kInf;
        for (std::size_t i = 0; i < m; ++i)
          if (mask & (1u << i)) dj = std::min(dj, dist_matrix[sa[i] * n + j]);
        if (dj < eps) nu += mb[j];
      }
      if (mu > nu + eps + 1e-15) return false;
    }
    return true;
  };
  auto ok = [&](double eps) {
    return ok_one_side(sx, mass_x, sy, mass_y, eps) && ok_one_side(sy, mass_y, sx, mass_x, eps);
  };
  double lo = 0.0, hi = dmax + std::max(tot_x, tot_y) + 1e-12;
  for (int it = 0; it < 60; ++it) {
    double mid = 0.5 * (lo + hi);
    if (ok(mid)) hi = mid;
    else lo = mid;
  }
  return hi;
}

GhpResult dghp_compact(const WTree& x, const WTree& y, GhpMode mode, const GhpOptions& opts) {
  x.summary();
  y.summary();
  if (mode == GhpMode::upper) {
    Net nx = build_net(x, true), ny = build_net(y, true);
    std::vector<Candidate> cands{root_candidate(), greedy_candidate(nx, ny, x, y)};
    if (opts.hint) {
      Candidate h;
      for (auto& [lx, ly] : opts.hint->pairs)
        h.pairs.push_back({net_index_of(nx, x, lx), net_index_of(ny, y, ly)});
      h.mass_aligned = opts.hint_mass_aligned;
      cands.push_back(std::move(h));
    }
    double best = kInf;
    for (const Candidate& c : cands) best = std::min(best, evaluate_upper(nx, ny, c));
    return {best, 0.5 * std::max(nx.max_gap, ny.max_gap)};
  }

  // exact_small: exhaustive minimization over root-anchored pair-cover maps
  Net nx = build_net(x, false), ny = build_net(y, false);
  if (static_cast<int>(nx.k) > opts.exact_limit || static_cast<int>(ny.k) > opts.exact_limit)
    throw SizeLimitError("dghp_compact: exact_small net exceeds the configured limit");
  double mass_gap = std::fabs(nx.sigma - ny.sigma);

  // seed with the greedy candidate evaluated in exact semantics
  IndexPairs assignment;
  double best = kInf;
  long budget = opts.search_budget;

  auto evaluate_exact = [&](const IndexPairs& r) {
    double dis = pair_distortion(nx, ny, r);
    double dp = prohorov_in_glue(nx, ny, r, 0.5 * dis);
    return dis + dp;  // d_H + d_root each contribute dis/2 for covering maps
  };
  {
    Candidate g = greedy_candidate(nx, ny, x, y);
    best = evaluate_exact(g.pairs);
  }

  std::size_t total = (nx.k - 1) + (ny.k - 1);
  assignment.reserve(total + 1);
  assignment.push_back({0, 0});

  // incremental distortion maintenance
  std::vector<double> dis_stack{0.0};

  auto extend_dis = [&](const IndexPairs& cur, int xi, int yi) {
    double d = dis_stack.back();
    for (auto& [a, b] : cur)
      d = std::max(d, std::fabs(nx.dist(a, xi) - ny.dist(b, yi)));
    return d;
  };

  std::function<void(std::size_t)> rec = [&](std::size_t pos) {
    if (budget-- <= 0) throw SizeLimitError("dghp_compact: exact_small search budget exceeded");
    if (pos == total) {
      double v = evaluate_exact(assignment);
      best = std::min(best, v);
      return;
    }
    bool x_side = pos < nx.k - 1;
    int fixed = x_side ? static_cast<int>(pos + 1) : -1;
    int fixed_y = x_side ? -1 : static_cast<int>(pos - (nx.k - 1) + 1);
    std::size_t choices = x_side ? ny.k : nx.k;
    for (std::size_t c = 0; c < choices; ++c) {
      int xi = x_side ? fixed : static_cast<int>(c);
      int yi = x_side ? static_cast<int>(c) : fixed_y;
      double nd = extend_dis(assignment, xi, yi);
      if (nd + mass_gap >= best - 1e-15) continue;
      assignment.push_back({xi, yi});
      dis_stack.push_back(nd);
      rec(pos + 1);
      dis_stack.pop_back();
      assignment.pop_back();
    }
  };
  rec(0);
  return {best, 0.5 * std::max(nx.max_gap, ny.max_gap)};
}

double dghp_full(const WTree& x, const WTree& y, const GhpOptions& opts) {
  x.summary();
  y.summary();
  std::vector<double> brk{0.0};
  auto collect = [&](const WTree& t) {
    for (NodeId v = 1; v < static_cast<NodeId>(t.node_count()); ++v)
      brk.push_back(t.node_height(v));
    for (const auto& a : t.atoms())
      brk.push_back(a.edge == 0 ? 0.0 : t.node_height(t.parent(a.edge)) + a.offset);
  };
  collect(x);
  collect(y);
  std::sort(brk.begin(), brk.end());
  brk.erase(std::unique(brk.begin(), brk.end(),
                        [](double a, double b) { return std::fabs(a - b) < 1e-12; }),
            brk.end());
  double rmax = brk.back();

  auto integrand = [&](double r) {
    WTree xr = truncate(x, r), yr = truncate(y, r);
    GhpOptions o = opts;
    o.hint = nullptr;
    double v = dghp_compact(xr, yr, GhpMode::upper, o).value;
    return std::exp(-r) * std::min(1.0, v);
  };
  double total = 0.0;
  for (std::size_t i = 0; i + 1 < brk.size(); ++i) {
    if (brk[i + 1] - brk[i] < 1e-14) continue;
    total += integrate_adaptive(integrand, brk[i] + 1e-13, brk[i + 1], 1e-6, 1e-9, 16);
  }
  double v_full = dghp_compact(x, y, GhpMode::upper, opts).value;
  total += std::exp(-rmax) * std::min(1.0, v_full);
  return total;
}

Correspondence excursion_correspondence(const Excursion& f, const std::vector<Location>& fx,
                                        const Excursion& g, const std::vector<Location>& gx) {
  Correspondence r;
  r.pairs.push_back({{0, 0.0}, {0, 0.0}});
  std::size_t n = std::max(fx.size(), gx.size());
  for (std::size_t k = 0; k < n; ++k) {
    Location a = k < fx.size() ? fx[k] : Location{0, 0.0};
    Location b = k < gx.size() ? gx[k] : Location{0, 0.0};
    r.pairs.push_back({a, b});
  }
  return r;
}

}  // namespace levytree
