#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

namespace levytree {

struct MeanSe {
  std::size_t n = 0;
  double mean = 0.0;
  double se = 0.0;
  double variance = 0.0;
};

MeanSe mean_se(const std::vector<double>& xs);

// Binomial proportion and its standard error.
struct Proportion {
  std::size_t n;
  std::size_t hits;
  double p;
  double se;
};
Proportion proportion(std::size_t hits, std::size_t n);

// One-sample Kolmogorov-Smirnov against a CDF; asymptotic p-value.
struct KsResult {
  double statistic;
  double p_value;
};
KsResult ks_test(std::vector<double> xs, const std::function<double(double)>& cdf);
KsResult ks_test_two_sample(std::vector<double> xs, std::vector<double> ys);

// Chi-square goodness of fit of counts against expected bin masses.
struct Chi2Result {
  double statistic;
  int dof;
  double p_value;
};
Chi2Result chi2_gof(const std::vector<std::size_t>& counts, const std::vector<double>& expected);

// Randomized PIT of a Poisson observation: exactly U(0,1) under the null.
double poisson_pit(uint64_t k, double mean, double u);

// Uniformity check via chi-square on equal bins.
Chi2Result uniform_chi2(const std::vector<double>& pit, int bins = 10);

// Runs fn(i) for i in [0, n) on `workers` threads (0 = hardware default).
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn, int workers = 0);

}  // namespace levytree
