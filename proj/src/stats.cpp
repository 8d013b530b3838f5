#include "levytree/stats.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "levytree/errors.hpp"
#include "levytree/numeric.hpp"

namespace levytree {

MeanSe mean_se(const std::vector<double>& xs) {
  MeanSe out;
  out.n = xs.size();
  if (xs.empty()) return out;
  double mean = 0.0, m2 = 0.0;
  std::size_t k = 0;
  for (double x : xs) {
    ++k;
    double d = x - mean;
    mean += d / k;
    m2 += d * (x - mean);
  }
  out.mean = mean;
  out.variance = xs.size() > 1 ? m2 / (xs.size() - 1) : 0.0;
  out.se = std::sqrt(out.variance / xs.size());
  return out;
}

Proportion proportion(std::size_t hits, std::size_t n) {
  if (n == 0) throw DomainError("proportion: empty sample");
  double p = static_cast<double>(hits) / n;
  return {n, hits, p, std::sqrt(p * (1.0 - p) / n)};
}

KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf) {
  if (xs.empty()) throw DomainError("ks_test: empty sample");
  std::sort(xs.begin(), xs.end());
  double d = 0.0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    double f = cdf(xs[i]);
    d = std::max(d, std::fabs(f - i / n));
    d = std::max(d, std::fabs((i + 1) / n - f));
  }
  double lambda = (std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n)) * d;
  return {d, kolmogorov_sf(lambda)};
}

KsResult ks_test_two_sample(std::vector<double> xs, std::vector<double> ys) {
  if (xs.empty() || ys.empty()) throw DomainError("ks_test_two_sample: empty sample");
  std::sort(xs.begin(), xs.end());
  std::sort(ys.begin(), ys.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < xs.size() && j < ys.size()) {
    double x = xs[i], y = ys[j];
    if (x <= y) ++i;
    if (y <= x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / xs.size() -
                              static_cast<double>(j) / ys.size()));
  }
  double ne = static_cast<double>(xs.size()) * ys.size() / (xs.size() + ys.size());
  double lambda = (std::sqrt(ne) + 0.12 + 0.11 / std::sqrt(ne)) * d;
  return {d, kolmogorov_sf(lambda)};
}

Chi2Result chi2_gof(const std::vector<std::size_t>& counts, const std::vector<double>& expected) {
  if (counts.size() != expected.size() || counts.size() < 2)
    throw DomainError("chi2_gof: bad bins");
  double stat = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    if (expected[i] <= 0.0) throw DomainError("chi2_gof: non-positive expectation");
    double d = counts[i] - expected[i];
    stat += d * d / expected[i];
  }
  int dof = static_cast<int>(counts.size()) - 1;
  return {stat, dof, chi2_sf(stat, dof)};
}

double poisson_pit(uint64_t k, double mean, double u) {
  // F(k-1) + u * pmf(k), computed stably through the regularized gamma tail:
  // F(k-1) = Q(k, mean) for k >= 1.
  double f_below = k == 0 ? 0.0 : gamma_q(static_cast<double>(k), mean);
  double f_at = gamma_q(static_cast<double>(k) + 1.0, mean);
  return f_below + u * (f_at - f_below);
}

Chi2Result uniform_chi2(const std::vector<double>& pit, int bins) {
  std::vector<std::size_t> counts(bins, 0);
  for (double u : pit) {
    int b = std::min(bins - 1, std::max(0, static_cast<int>(u * bins)));
    ++counts[b];
  }
  std::vector<double> expected(bins, static_cast<double>(pit.size()) / bins);
  return chi2_gof(counts, expected);
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers) {
  if (n == 0) return;
  unsigned hw = std::thread::hardware_concurrency();
  unsigned w = workers > 0 ? static_cast<unsigned>(workers) : (hw ? hw : 2);
  w = std::min<std::size_t>(w, n);
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::atomic<bool> failed{false};
  auto worker = [&] {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= n || failed.load()) return;
      try {
        fn(i);
      } catch (...) {
        if (!failed.exchange(true)) error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < w; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (failed.load() && error) std::rethrow_exception(error);
}

}  // namespace levytree
