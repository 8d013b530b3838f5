#include "levytree/rng.hpp"

#include <cmath>

#include "levytree/errors.hpp"

namespace levytree {

uint64_t RngStream::poisson(double mean) {
  if (mean < 0.0) throw DomainError("poisson: negative mean");
  uint64_t total = 0;
  // Split by additivity until the product-of-uniforms method is safe.
  while (mean > 64.0) {
    double half = 0.5 * mean;
    mean -= half;
    double l = std::exp(-half), p = uniform();
    uint64_t k = 0;
    while (p > l) {
      ++k;
      p *= uniform();
    }
    total += k;
  }
  if (mean > 0.0) {
    double l = std::exp(-mean), p = uniform();
    uint64_t k = 0;
    while (p > l) {
      ++k;
      p *= uniform();
    }
    total += k;
  }
  return total;
}

double RngStream::gamma(double shape) {
  if (shape <= 0.0) throw DomainError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost to shape+1 then scale back (Marsaglia-Tsang trick).
    double u = uniform();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = gaussian();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double RngStream::inverse_gaussian(double mu, double lambda) {
  if (mu <= 0.0 || lambda <= 0.0) throw DomainError("inverse_gaussian: bad parameters");
  double nu = gaussian();
  double y = nu * nu;
  double x = mu + mu * mu * y / (2.0 * lambda) -
             mu / (2.0 * lambda) * std::sqrt(4.0 * mu * lambda * y + mu * mu * y * y);
  if (uniform() <= mu / (mu + x)) return x;
  return mu * mu / x;
}

}  // namespace levytree
