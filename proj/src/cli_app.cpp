#include "levytree/cli_app.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "levytree/errors.hpp"
#include "levytree/ghp.hpp"
#include "levytree/growth.hpp"
#include "levytree/mechanism.hpp"
#include "levytree/pruning.hpp"
#include "levytree/sampler.hpp"
#include "levytree/stats.hpp"

namespace levytree {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitIo = 3;
constexpr int kExitNumeric = 4;
constexpr int kExitCheck = 5;

std::string fmt(double v) {
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::vector<double> parse_grid(const std::string& csv) {
  std::vector<double> out;
  std::istringstream in(csv);
  std::string tok;
  while (std::getline(in, tok, ',')) {
    if (tok.empty()) continue;
    try {
      out.push_back(std::stod(tok));
    } catch (const std::exception&) {
      throw ConfigError("bad number in grid: '" + tok + "'");
    }
  }
  if (out.empty()) throw ConfigError("empty grid");
  return out;
}

struct Output {
  explicit Output(const std::string& path) {
    if (path.empty() || path == "-") {
      os = &std::cout;
    } else {
      file = std::make_unique<std::ofstream>(path);
      if (!*file) throw IoError("cannot open output file '" + path + "'");
      os = file.get();
    }
  }
  std::ostream& stream() { return *os; }
  std::unique_ptr<std::ofstream> file;
  std::ostream* os;
};

// Every data file starts with the resolved configuration for reproducibility.
void write_header(std::ostream& out, const std::string& command,
                  const std::map<std::string, std::string>& config) {
  out << "# levytree " << command << '\n';
  for (auto& [k, v] : config) out << "# " << k << '=' << v << '\n';
}

struct CommonArgs {
  std::string mechanism = "quadratic alpha=0 beta=1";
  uint64_t seed = 0;
  bool seed_given = false;
  int workers = 0;
  std::string out_path = "-";
  bool check = false;

  std::map<std::string, std::string> config;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--mechanism", mechanism, "mechanism spec string");
    cmd->add_option("--seed", seed, "rng seed (required)")->each([this](const std::string&) {
      seed_given = true;
    });
    cmd->add_option("--workers", workers, "replicate worker threads (0 = auto)");
    cmd->add_option("--out", out_path, "output csv path ('-' = stdout)");
    cmd->add_flag("--check", check, "verify against analytic targets (exit 5 on failure)");
  }

  void note(const std::string& k, const std::string& v) { config[k] = v; }
  void note(const std::string& k, double v) { config[k] = fmt(v); }
  void note(const std::string& k, uint64_t v) { config[k] = std::to_string(v); }

  void finalize_common(const std::string& command) {
    if (!seed_given) throw ConfigError(command + ": --seed is required");
    note("mechanism", mechanism);
    note("seed", seed);
    note("workers", static_cast<uint64_t>(workers));
  }
};

// ---------------------------------------------------------------------------

int cmd_psi_table(CommonArgs& c, const std::string& thetas_s, const std::string& lambdas_s,
                  double t_time, double h) {
  c.finalize_common("psi-table");
  BranchingMechanism m = parse_mechanism(c.mechanism);
  std::vector<double> thetas = parse_grid(thetas_s), lambdas = parse_grid(lambdas_s);
  c.note("thetas", thetas_s);
  c.note("lambdas", lambdas_s);
  c.note("t", t_time);
  c.note("h", h);
  Output out(c.out_path);
  write_header(out.stream(), "psi-table", c.config);
  out.stream() << "theta,lambda,psi,psi_prime,u,b\n";
  bool ok = true;
  for (double th : thetas) {
    BranchingMechanism mt = m.shifted(th);
    double b = mt.extinction(h);
    for (double la : lambdas) {
      double psi = mt.eval(la, 0), dpsi = mt.eval(la, 1), u = mt.cumulant(t_time, la);
      out.stream() << fmt(th) << ',' << fmt(la) << ',' << fmt(psi) << ',' << fmt(dpsi) << ','
                   << fmt(u) << ',' << fmt(b) << '\n';
      if (c.check && m.is_quadratic()) {
        QuadraticView qv = quadratic_view(m);
        double q = qv.theta + th;
        if (q > 0.0) {
          double e = std::exp(2.0 * qv.beta * q * t_time);
          double u_ref = 2.0 * q * la / ((2.0 * q + la) * e - la);
          double b_ref = 2.0 * q / (std::exp(2.0 * qv.beta * q * h) - 1.0);
          if (std::fabs(u - u_ref) > 1e-9 * std::max(1.0, std::fabs(u_ref))) ok = false;
          if (std::fabs(b - b_ref) > 1e-9 * std::max(1.0, std::fabs(b_ref))) ok = false;
        }
      }
    }
  }
  if (c.check && !ok) {
    std::cerr << "psi-table: closed-form check failed\n";
    return kExitCheck;
  }
  return kExitOk;
}

int cmd_tree_sample(CommonArgs& c, double x, double step, int replicates, double height_cap,
                    double law_height, const std::string& tree_out, int keep_trees) {
  c.finalize_common("tree-sample");
  BranchingMechanism m = parse_mechanism(c.mechanism);
  c.note("x", x);
  c.note("step", step);
  c.note("replicates", static_cast<uint64_t>(replicates));
  c.note("height_cap", height_cap);
  if (replicates <= 0) throw ConfigError("tree-sample: replicates must be positive");

  ForestOptions fo;
  fo.height_cap = height_cap;
  fo.build_tree = false;
  if (law_height > 0.0) fo.count_heights = {law_height};
  std::vector<ForestStats> stats(replicates);
  parallel_for(
      replicates,
      [&](std::size_t i) {
        RngStream rng(c.seed, i);
        stats[i] = sample_forest_stats(m, x, step, rng, fo);
      },
      c.workers);
  for (int i = 0; i < keep_trees && i < replicates; ++i) {
    RngStream rng(c.seed, i);
    ForestOptions fo_tree = fo;
    fo_tree.build_tree = true;
    TreeSample ts = sample_forest(m, x, step, rng, fo_tree);
    std::ofstream tf(tree_out + "." + std::to_string(i) + ".wtree");
    if (!tf) throw IoError("cannot open tree output '" + tree_out + "'");
    ts.tree.save(tf);
  }
  Output out(c.out_path);
  write_header(out.stream(), "tree-sample", c.config);
  out.stream() << "replicate,seed,statistic,value\n";
  for (int i = 0; i < replicates; ++i) {
    out.stream() << i << ',' << c.seed << ",sigma," << fmt(stats[i].sigma) << '\n';
    out.stream() << i << ',' << c.seed << ",h_max," << fmt(stats[i].h_max) << '\n';
    out.stream() << i << ',' << c.seed << ",excursions," << stats[i].excursions << '\n';
  }
  if (c.check && law_height > 0.0) {
    std::size_t below = 0;
    for (auto& s : stats)
      if (s.h_max <= law_height) ++below;
    Proportion p = proportion(below, replicates);
    double target = std::exp(-x * m.extinction(law_height));
    std::cerr << "tree-sample check: P(H_max <= " << law_height << ") = " << p.p << " +- " << p.se
              << " target " << target << '\n';
    if (std::fabs(p.p - target) > 3.0 * p.se + 1e-12) return kExitCheck;
  }
  return kExitOk;
}

int cmd_ghp_dist(CommonArgs& c, const std::string& tree_a, const std::string& tree_b,
                 const std::string& mode_s) {
  // distances are deterministic; the seed requirement is waived here
  c.seed_given = true;
  c.finalize_common("ghp-dist");
  c.note("tree_a", tree_a);
  c.note("tree_b", tree_b);
  c.note("mode", mode_s);
  std::ifstream fa(tree_a), fb(tree_b);
  if (!fa) throw IoError("cannot open '" + tree_a + "'");
  if (!fb) throw IoError("cannot open '" + tree_b + "'");
  WTree a = WTree::load(fa), b = WTree::load(fb);
  GhpMode mode;
  if (mode_s == "upper") mode = GhpMode::upper;
  else if (mode_s == "exact_small") mode = GhpMode::exact_small;
  else throw ConfigError("ghp-dist: mode must be upper or exact_small");
  GhpResult r = dghp_compact(a, b, mode);
  Output out(c.out_path);
  write_header(out.stream(), "ghp-dist", c.config);
  out.stream() << "treeA,treeB,mode,value,net_resolution\n";
  out.stream() << tree_a << ',' << tree_b << ',' << mode_s << ',' << fmt(r.value) << ','
               << fmt(r.net_resolution) << '\n';
  return kExitOk;
}

int cmd_prune(CommonArgs& c, double x, double step, double theta, double height_cap,
              int replicates, double law_height) {
  c.finalize_common("prune");
  BranchingMechanism m = parse_mechanism(c.mechanism);
  c.note("x", x);
  c.note("step", step);
  c.note("theta", theta);
  c.note("replicates", static_cast<uint64_t>(replicates));
  c.note("height_cap", height_cap);
  if (replicates <= 0) throw ConfigError("prune: replicates must be positive");
  QuadraticView qv = quadratic_view(m);

  struct Row {
    double sigma_pruned, hmax_pruned, marks;
  };
  std::vector<Row> rows(replicates);
  parallel_for(
      replicates,
      [&](std::size_t i) {
        RngStream rng(c.seed, i);
        ForestOptions fo;
        fo.height_cap = height_cap;
        TreeSample ts = sample_forest(m, x, step, rng, fo);
        MarkMeasure marks = sample_marks(ts.tree, qv.beta, theta, rng);
        WTree pruned = prune_at(ts.tree, marks, theta);
        rows[i] = {pruned.sigma(), pruned.h_max(),
                   static_cast<double>(marks.skeleton.size())};
      },
      c.workers);
  Output out(c.out_path);
  write_header(out.stream(), "prune", c.config);
  out.stream() << "replicate,seed,statistic,value\n";
  for (int i = 0; i < replicates; ++i) {
    out.stream() << i << ',' << c.seed << ",sigma_pruned," << fmt(rows[i].sigma_pruned) << '\n';
    out.stream() << i << ',' << c.seed << ",hmax_pruned," << fmt(rows[i].hmax_pruned) << '\n';
    out.stream() << i << ',' << c.seed << ",skeleton_marks," << fmt(rows[i].marks) << '\n';
  }
  if (c.check && law_height > 0.0 && law_height < height_cap) {
    std::size_t below = 0;
    for (auto& r : rows)
      if (r.hmax_pruned <= law_height) ++below;
    Proportion p = proportion(below, replicates);
    double target = std::exp(-x * m.shifted(theta).extinction(law_height));
    std::cerr << "prune check: P(H_max(pruned) <= " << law_height << ") = " << p.p << " +- "
              << p.se << " target " << target << '\n';
    if (std::fabs(p.p - target) > 3.0 * p.se + 1e-12) return kExitCheck;
  }
  return kExitOk;
}

int cmd_grow(CommonArgs& c, const std::string& mode, double x, double step, double theta_start,
             double theta_end, double eps, bool compensate, int replicates,
             const std::string& heights_s, const std::string& log_path) {
  c.finalize_common("grow");
  BranchingMechanism m = parse_mechanism(c.mechanism);
  c.note("mode", mode);
  c.note("x", x);
  c.note("step", step);
  c.note("theta_start", theta_start);
  c.note("theta_end", theta_end);
  c.note("eps", eps);
  c.note("compensate", static_cast<uint64_t>(compensate));
  c.note("replicates", static_cast<uint64_t>(replicates));
  if (replicates <= 0) throw ConfigError("grow: replicates must be positive");
  QuadraticView qv = quadratic_view(m);
  if (std::fabs(qv.theta) > 1e-12)
    throw ConfigError("grow: mechanism must be the critical quadratic");
  std::vector<double> heights;
  if (!heights_s.empty()) heights = parse_grid(heights_s);
  c.note("heights", heights_s);

  GrowOptions go;
  go.eps = eps;
  go.compensate_mass = compensate;
  go.step = step;
  go.track_heights = heights;
  const bool tree_mode = mode == "tree";
  if (!tree_mode && mode != "mass") throw ConfigError("grow: mode must be mass or tree");
  if (!tree_mode && !heights.empty()) throw ConfigError("grow: heights need mode=tree");

  std::vector<GrowthTrajectory> trajs(replicates);
  BranchingMechanism m_start = m.shifted(theta_start);
  parallel_for(
      replicates,
      [&](std::size_t i) {
        RngStream rng(c.seed, i);
        if (tree_mode) {
          TreeSample seed_tree = sample_forest(m_start, x, step, rng);
          trajs[i] = grow_tree(m, seed_tree.tree, theta_start, theta_end, rng, go);
        } else {
          // seed mass: inverse-Gaussian forest mass of the shifted mechanism
          double q = theta_start;
          double sigma0 = rng.inverse_gaussian(x / (2.0 * qv.beta * q),
                                               x * x / (2.0 * qv.beta));
          trajs[i] = grow_mass(m, sigma0, theta_start, theta_end, rng, go);
        }
      },
      c.workers);

  Output out(c.out_path);
  write_header(out.stream(), "grow", c.config);
  out.stream() << "replicate,seed,A,sigma_end,hmax_end,events";
  for (double h : heights) out.stream() << ",A_" << fmt(h);
  out.stream() << '\n';
  for (int i = 0; i < replicates; ++i) {
    const GrowthTrajectory& tr = trajs[i];
    out.stream() << i << ',' << c.seed << ','
                 << (tr.ascension ? fmt(*tr.ascension) : std::string("none")) << ','
                 << fmt(tr.sigma_end) << ',' << fmt(tr.hmax_end) << ',' << tr.events.size();
    for (auto& rec : tr.exit_times)
      out.stream() << ',' << (rec.a_h ? fmt(*rec.a_h) : std::string("none"));
    out.stream() << '\n';
  }
  if (!log_path.empty()) {
    Output log(log_path);
    write_header(log.stream(), "grow-log", c.config);
    log.stream() << "theta,event_type,x_height,graft_sigma,graft_height,sigma_after,hmax_after\n";
    const GrowthTrajectory& tr = trajs[0];
    if (tr.events.empty())
      log.stream() << fmt(theta_start) << ",none,nan,nan,nan," << fmt(tr.sigma_end) << ','
                   << fmt(tr.hmax_end) << '\n';
    for (auto& ev : tr.events)
      log.stream() << fmt(ev.theta) << ',' << (ev.infinite ? "infinite" : "finite") << ','
                   << fmt(ev.x_height) << ',' << fmt(ev.sigma) << ',' << fmt(ev.h) << ','
                   << fmt(ev.sigma_after) << ',' << fmt(ev.hmax_after) << '\n';
  }
  return kExitOk;
}

int cmd_exit_times(CommonArgs& c, double theta0, double h, double theta_start, double x,
                   double step, double eps, double window, int replicates) {
  c.finalize_common("exit-times");
  BranchingMechanism m = parse_mechanism(c.mechanism);
  c.note("theta0", theta0);
  c.note("h", h);
  c.note("theta_start", theta_start);
  c.note("x", x);
  c.note("step", step);
  c.note("eps", eps);
  c.note("window", window);
  c.note("replicates", static_cast<uint64_t>(replicates));
  if (replicates <= 0) throw ConfigError("exit-times: replicates must be empty-positive");
  if (!(theta0 < 0.0)) throw ConfigError("exit-times: theta0 must be negative");

  GrowOptions go;
  go.eps = eps;
  go.step = step;
  go.compensate_mass = true;
  go.track_heights = {h};
  BranchingMechanism m_start = m.shifted(theta_start);
  double theta_end = theta0 - window - 1e-9;

  struct Row {
    double a = kNaN, a_h = kNaN;
  };
  std::vector<Row> rows(replicates);
  parallel_for(
      replicates,
      [&](std::size_t i) {
        RngStream rng(c.seed, i);
        TreeSample seed_tree = sample_forest(m_start, x, step, rng);
        GrowthTrajectory tr = grow_tree(m, seed_tree.tree, theta_start, theta_end, rng, go);
        if (tr.ascension) rows[i].a = *tr.ascension;
        if (tr.exit_times[0].a_h) rows[i].a_h = *tr.exit_times[0].a_h;
      },
      c.workers);

  Output out(c.out_path);
  write_header(out.stream(), "exit-times", c.config);
  out.stream() << "replicate,seed,A,A_h\n";
  for (int i = 0; i < replicates; ++i)
    out.stream() << i << ',' << c.seed << ',' << fmt(rows[i].a) << ',' << fmt(rows[i].a_h)
                 << '\n';

  // empirical P(A_h = A | A in [theta0 +- window]) against the closed form
  std::size_t cond = 0, eq = 0;
  for (auto& r : rows) {
    if (std::isnan(r.a) || std::fabs(r.a - theta0) > window) continue;
    ++cond;
    if (!std::isnan(r.a_h) && r.a_h == r.a) ++eq;
  }
  ExitGivenAscension ega = exit_given_ascension(m, theta0, theta0, h);
  std::cerr << "exit-times: conditional replicates " << cond << '\n';
  if (cond > 0) {
    Proportion p = proportion(eq, cond);
    std::cerr << "exit-times: P(A_h = A | A ~ " << theta0 << ") = " << p.p << " +- " << p.se
              << " target " << ega.p_eq << '\n';
    if (c.check && std::fabs(p.p - ega.p_eq) > 3.0 * p.se + 1e-12) return kExitCheck;
  } else if (c.check) {
    std::cerr << "exit-times: no conditional replicates in the window\n";
    return kExitCheck;
  }
  return kExitOk;
}

int cmd_spine(CommonArgs& c, double theta, double h, double step, double eps, int replicates) {
  c.finalize_common("spine");
  BranchingMechanism m = parse_mechanism(c.mechanism);
  c.note("theta", theta);
  c.note("h", h);
  c.note("step", step);
  c.note("eps", eps);
  c.note("replicates", static_cast<uint64_t>(replicates));
  if (replicates <= 0) throw ConfigError("spine: replicates must be positive");

  SpineOptions so;
  so.eps = eps;
  so.step = step;
  struct Row {
    double spine, hmax_before, overshoot_h;
  };
  std::vector<Row> rows(replicates);
  parallel_for(
      replicates,
      [&](std::size_t i) {
        RngStream rng(c.seed, i);
        ExitSpineSample s = sample_exit_spine(m, theta, h, rng, so);
        rows[i] = {s.spine_height, s.tree_before.h_max(), s.overshoot.h_max};
      },
      c.workers);
  Output out(c.out_path);
  write_header(out.stream(), "spine", c.config);
  out.stream() << "replicate,seed,spine_height,hmax_before,overshoot_h\n";
  for (int i = 0; i < replicates; ++i)
    out.stream() << i << ',' << c.seed << ',' << fmt(rows[i].spine) << ','
                 << fmt(rows[i].hmax_before) << ',' << fmt(rows[i].overshoot_h) << '\n';
  if (c.check) {
    // KS against the weighted spine density
    ExtinctionProfile prof(m, theta, h);
    double dpsi = m.eval(theta, 1);
    auto weighted_cdf_raw = [&](double t) {
      return integrate_adaptive(
          [&](double r) {
            double b = prof.b(r);
            double g = prof.shifted_mechanism().eval(b, 1) - prof.shifted_mechanism().eval(0.0, 1);
            return g * std::exp(-prof.gamma_int(r)) * std::exp(-dpsi * r);
          },
          0.0, std::min(t, prof.t_cut()), 1e-9, 1e-12);
    };
    double z = weighted_cdf_raw(h);
    std::vector<double> xs;
    for (auto& r : rows) xs.push_back(r.spine);
    KsResult ks = ks_test(xs, [&](double t) { return weighted_cdf_raw(t) / z; });
    std::cerr << "spine check: KS D = " << ks.statistic << " p = " << ks.p_value << '\n';
    if (ks.p_value <= 0.01) return kExitCheck;
  }
  return kExitOk;
}

int cmd_report(CommonArgs& c, const std::string& inputs_s) {
  c.seed_given = true;  // deterministic merge
  c.finalize_common("report");
  c.note("inputs", inputs_s);
  std::vector<std::string> files;
  {
    std::istringstream in(inputs_s);
    std::string tok;
    while (std::getline(in, tok, ',')) files.push_back(tok);
  }
  if (files.empty()) throw ConfigError("report: no inputs");
  std::string expect_header;
  struct Acc {
    std::vector<double> values;
  };
  std::map<std::string, Acc> stats;
  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw IoError("report: cannot open '" + path + "'");
    std::string line;
    bool header_seen = false;
    while (std::getline(in, line)) {
      if (line.empty() || line[0] == '#') continue;
      if (!header_seen) {
        header_seen = true;
        if (expect_header.empty()) expect_header = line;
        else if (line != expect_header)
          throw SchemaMismatchError("report: column mismatch in '" + path + "'");
        if (line != "replicate,seed,statistic,value")
          throw SchemaMismatchError("report: expected replicate,seed,statistic,value columns");
        continue;
      }
      std::istringstream ls(line);
      std::string rep, seed, stat, val;
      if (!std::getline(ls, rep, ',') || !std::getline(ls, seed, ',') ||
          !std::getline(ls, stat, ',') || !std::getline(ls, val, ','))
        throw SchemaMismatchError("report: bad row '" + line + "'");
      try {
        stats[stat].values.push_back(std::stod(val));
      } catch (const std::exception&) {
        throw SchemaMismatchError("report: bad value '" + val + "'");
      }
    }
  }
  Output out(c.out_path);
  write_header(out.stream(), "report", c.config);
  out.stream() << "statistic,n,mean,se\n";
  std::cerr << "statistic            n        mean          se\n";
  for (auto& [name, acc] : stats) {
    MeanSe ms = mean_se(acc.values);
    out.stream() << name << ',' << ms.n << ',' << fmt(ms.mean) << ',' << fmt(ms.se) << '\n';
    std::cerr << name << "  " << ms.n << "  " << ms.mean << "  " << ms.se << '\n';
  }
  return kExitOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"psi-Levy continuum-random-tree simulation toolkit"};
  app.set_config("--config", "", "flat key=value configuration file");
  app.require_subcommand(1);

  CommonArgs c;

  auto* psi = app.add_subcommand("psi-table", "tabulate psi, psi', u(t,.), b(h)");
  std::string thetas = "0.25,0.5,1,2", lambdas = "0.5,1,2,4";
  double t_time = 1.0, h = 1.0;
  c.add_to(psi);
  psi->add_option("--thetas", thetas, "theta grid");
  psi->add_option("--lambdas", lambdas, "lambda grid");
  psi->add_option("--t", t_time, "cumulant time");
  psi->add_option("--h", h, "extinction horizon");

  auto* ts = app.add_subcommand("tree-sample", "sample quadratic Levy forests");
  double x = 1.0, step = 1e-4, height_cap = kInf, law_height = 0.0;
  int replicates = 100, keep_trees = 0;
  std::string tree_out = "tree";
  c.add_to(ts);
  ts->add_option("--x", x, "initial mass");
  ts->add_option("--step", step, "height-path grid step");
  ts->add_option("--replicates", replicates, "replicate count");
  ts->add_option("--height-cap", height_cap, "clamp the height path");
  ts->add_option("--law-height", law_height, "height-law check level");
  ts->add_option("--tree-out", tree_out, "tree file prefix");
  ts->add_option("--keep-trees", keep_trees, "write this many trees");

  auto* gd = app.add_subcommand("ghp-dist", "GHP distance between tree files");
  std::string tree_a, tree_b, mode = "upper";
  c.add_to(gd);
  gd->add_option("--tree-a", tree_a, "first wtree file")->required();
  gd->add_option("--tree-b", tree_b, "second wtree file")->required();
  gd->add_option("--mode", mode, "upper or exact_small");

  auto* pr = app.add_subcommand("prune", "mark and prune sampled forests");
  double prune_theta = 1.0, prune_cap = kInf, prune_law_h = 0.0;
  double prune_x = 1.0, prune_step = 1e-4;
  int prune_reps = 100;
  c.add_to(pr);
  pr->add_option("--x", prune_x, "initial mass");
  pr->add_option("--step", prune_step, "grid step");
  pr->add_option("--theta", prune_theta, "pruning level");
  pr->add_option("--height-cap", prune_cap, "clamp the height path");
  pr->add_option("--replicates", prune_reps, "replicate count");
  pr->add_option("--law-height", prune_law_h, "pruned-height-law check level");

  auto* gr = app.add_subcommand("grow", "backward growth trajectories");
  std::string grow_mode = "mass", grow_heights, grow_log;
  double g_x = 1.0, g_step = 1e-4, g_ts = 2.0, g_te = 1.0, g_eps = 1e-4;
  bool g_comp = false;
  int g_reps = 100;
  c.add_to(gr);
  gr->add_option("--mode", grow_mode, "mass or tree");
  gr->add_option("--x", g_x, "seed forest initial mass");
  gr->add_option("--step", g_step, "grid step");
  gr->add_option("--theta-start", g_ts, "start (larger) theta");
  gr->add_option("--theta-end", g_te, "end (smaller) theta");
  gr->add_option("--eps", g_eps, "graft mass truncation");
  gr->add_flag("--compensate", g_comp, "deterministic sub-eps mass drift");
  gr->add_option("--replicates", g_reps, "replicate count");
  gr->add_option("--heights", grow_heights, "exit levels to track (tree mode)");
  gr->add_option("--log", grow_log, "trajectory event log path (first replicate)");

  auto* et = app.add_subcommand("exit-times", "exit vs ascension conditional laws");
  double et_theta0 = -1.0, et_h = 1.0, et_ts = 2.0, et_x = 1.0, et_step = 1e-4, et_eps = 1e-4,
         et_window = 0.1;
  int et_reps = 1000;
  c.add_to(et);
  et->add_option("--theta0", et_theta0, "ascension conditioning point (negative)");
  et->add_option("--h", et_h, "exit height");
  et->add_option("--theta-start", et_ts, "seed theta");
  et->add_option("--x", et_x, "seed forest mass");
  et->add_option("--step", et_step, "grid step");
  et->add_option("--eps", et_eps, "graft truncation");
  et->add_option("--window", et_window, "conditioning half-width around theta0");
  et->add_option("--replicates", et_reps, "replicate count");

  auto* sp = app.add_subcommand("spine", "spinal samples of the tree at the exit time");
  double sp_theta = 1.0, sp_h = 1.0, sp_step = 1e-4, sp_eps = 1e-4;
  int sp_reps = 1000;
  c.add_to(sp);
  sp->add_option("--theta", sp_theta, "exit-time value A_h = theta");
  sp->add_option("--h", sp_h, "exit height");
  sp->add_option("--step", sp_step, "grid step");
  sp->add_option("--eps", sp_eps, "graft truncation");
  sp->add_option("--replicates", sp_reps, "replicate count");

  auto* rp = app.add_subcommand("report", "merge replicate shards");
  std::string inputs;
  c.add_to(rp);
  rp->add_option("--inputs", inputs, "comma-separated csv shards")->required();

  std::vector<std::string> argv_rev(args.rbegin(), args.rend());
  try {
    app.parse(argv_rev);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) {  // --help
      std::cout << app.help();
      return kExitOk;
    }
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  }

  try {
    if (psi->parsed()) return cmd_psi_table(c, thetas, lambdas, t_time, h);
    if (ts->parsed())
      return cmd_tree_sample(c, x, step, replicates, height_cap, law_height, tree_out, keep_trees);
    if (gd->parsed()) return cmd_ghp_dist(c, tree_a, tree_b, mode);
    if (pr->parsed())
      return cmd_prune(c, prune_x, prune_step, prune_theta, prune_cap, prune_reps, prune_law_h);
    if (gr->parsed())
      return cmd_grow(c, grow_mode, g_x, g_step, g_ts, g_te, g_eps, g_comp, g_reps, grow_heights,
                      grow_log);
    if (et->parsed())
      return cmd_exit_times(c, et_theta0, et_h, et_ts, et_x, et_step, et_eps, et_window, et_reps);
    if (sp->parsed()) return cmd_spine(c, sp_theta, sp_h, sp_step, sp_eps, sp_reps);
    if (rp->parsed()) return cmd_report(c, inputs);
    throw ConfigError("no subcommand given");
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const Error& e) {
    std::cerr << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  }
}

}  // namespace levytree
