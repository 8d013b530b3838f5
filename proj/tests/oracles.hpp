#pragma once

// Closed forms and brute-force baselines used as independent oracles.

#include <cmath>

#include "levytree/mechanism.hpp"

namespace oracle {

// quadratic psi_theta(l) = beta l^2 + 2 beta theta l
inline double quad_u(double beta, double theta, double t, double lambda) {
  if (theta == 0.0) return lambda / (1.0 + beta * t * lambda);
  double e = std::exp(2.0 * beta * theta * t);
  return 2.0 * theta * lambda / ((2.0 * theta + lambda) * e - lambda);
}

inline double quad_b(double beta, double theta, double h) {
  if (theta == 0.0) return 1.0 / (beta * h);
  return 2.0 * theta / (std::expm1(2.0 * beta * theta * h));
}

inline double quad_db_dtheta(double beta, double theta, double h) {
  // d/dtheta of 2 theta / (e^{2 beta theta h} - 1)
  double e = std::exp(2.0 * beta * theta * h);
  double den = e - 1.0;
  return (2.0 * den - 2.0 * theta * 2.0 * beta * h * e) / (den * den);
}

// N^psi[A_h >= theta | A = theta0] and N^psi[A_h = A | A = theta0]
// for psi = beta u^2 (paper's closed forms).
inline double quad_p_geq(double beta, double theta0, double theta, double h) {
  double hat = -2.0 * theta0 + theta;  // bar(theta0) - theta0 + theta
  double bh = beta * hat * h;
  double sh = std::sinh(bh);
  return 1.0 + bh / (sh * sh) - std::cosh(bh) / sh;
}

inline double quad_p_eq(double beta, double theta0, double h) {
  double bh = beta * theta0 * h;
  double sh = std::sinh(bh);
  return bh / (sh * sh) - std::cosh(bh) / sh;
}

// stable mechanism calibrated to psi(l) = l^{3/2}: with the r<1-compensated
// integral representation, alpha cancels the linear tail term.
inline levytree::BranchingMechanism stable_32() {
  double a = 1.5;
  double c = a * (a - 1.0) / std::tgamma(2.0 - a);
  return levytree::BranchingMechanism(c / (a - 1.0), 0.0, levytree::StableMeasure{a, c});
}

// supercritical variant: psi(l) = l^{3/2} - drift * l
inline levytree::BranchingMechanism stable_32_supercritical(double drift) {
  double a = 1.5;
  double c = a * (a - 1.0) / std::tgamma(2.0 - a);
  return levytree::BranchingMechanism(c / (a - 1.0) - drift, 0.0, levytree::StableMeasure{a, c});
}

inline levytree::BranchingMechanism quadratic(double alpha, double beta) {
  return levytree::BranchingMechanism(alpha, beta, levytree::ZeroMeasure{});
}

}  // namespace oracle
