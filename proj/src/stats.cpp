#include "gpm/stats.hpp"

#include <algorithm>
#include <cmath>

#include "gpm/error.hpp"

namespace gpm {

double mean_of(std::span<const double> xs) {
  if (xs.empty()) throw NumericalError("EMPTY_SAMPLE", "mean of an empty sample");
  double acc = 0.0;
  for (double x : xs) acc += x;
  return acc / static_cast<double>(xs.size());
}

double variance_of(std::span<const double> xs) {
  const double mu = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - mu) * (x - mu);
  return acc / static_cast<double>(xs.size());
}

double quantile_sorted(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw NumericalError("EMPTY_SAMPLE", "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw NumericalError("BAD_PARAM", "quantile level must lie in [0, 1]");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const std::size_t lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double w = pos - static_cast<double>(lo);
  if (w == 0.0) return sorted[lo];
  return (1.0 - w) * sorted[lo] + w * sorted[hi];
}

double quantile(std::span<const double> xs, double q) {
  std::vector<double> sorted(xs.begin(), xs.end());
  std::sort(sorted.begin(), sorted.end());
  return quantile_sorted(sorted, q);
}

}  // namespace gpm
