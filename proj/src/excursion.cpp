#include "levytree/excursion.hpp"

#include <algorithm>
#include <cmath>

#include "levytree/errors.hpp"

namespace levytree {

void Excursion::validate() const {
  if (values.size() < 2) throw EmptyExcursionError("excursion: needs at least two samples");
  if (!(step > 0.0)) throw DomainError("excursion: step must be positive");
  if (values.front() != 0.0 || values.back() != 0.0)
    throw DomainError("excursion: must start and end at zero");
  for (double v : values)
    if (!(v >= 0.0)) throw DomainError("excursion: values must be non-negative");
}

double Excursion::sigma() const {
  // grid measure of intervals touching the positive part
  std::size_t n = 0;
  for (std::size_t k = 0; k + 1 < values.size(); ++k)
    if (std::max(values[k], values[k + 1]) > 0.0) ++n;
  return static_cast<double>(n) * step;
}

double Excursion::max_value() const {
  double m = 0.0;
  for (double v : values) m = std::max(m, v);
  return m;
}

double Excursion::sup_diff(const Excursion& other) const {
  std::size_t n = std::max(values.size(), other.values.size());
  double m = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    double a = k < values.size() ? values[k] : 0.0;
    double b = k < other.values.size() ? other.values[k] : 0.0;
    m = std::max(m, std::fabs(a - b));
  }
  return m;
}

}  // namespace levytree
