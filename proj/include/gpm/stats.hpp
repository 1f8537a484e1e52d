#pragma once

#include <span>
#include <vector>

namespace gpm {

double mean_of(std::span<const double> xs);
/// Population variance.
double variance_of(std::span<const double> xs);
/// Linear-interpolation quantile of an unsorted sample (q in [0, 1]).
double quantile(std::span<const double> xs, double q);
/// Same, for a sample already sorted ascending.
double quantile_sorted(std::span<const double> sorted, double q);

}  // namespace gpm
