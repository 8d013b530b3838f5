#pragma once

#include <vector>

namespace levytree {

// Continuous non-negative path on a uniform grid, linearly interpolated,
// coding a compact real tree. values.front() == values.back() == 0.
struct Excursion {
  double step = 0.0;
  std::vector<double> values;

  // Throws EmptyExcursionError / DomainError when invariants fail.
  void validate() const;

  double sigma() const;     // grid length of the positive support
  double max_value() const;
  double sup_diff(const Excursion& other) const;  // ||f - g||_inf on the joint grid
};

}  // namespace levytree
