#pragma once

#include <vector>

namespace crcop {

/// Empirical Kendall rank correlation of paired samples, computed in
/// O(n log n) by merge-sort inversion counting (Knight's algorithm).
/// Ties are handled with the tau-b denominator.
double empirical_kendall_tau(const std::vector<double>& x, const std::vector<double>& y);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::vector<double> a, std::vector<double> b);

/// Linearly interpolated percentile, p in [0, 1]; the input is copied and
/// sorted internally.
double percentile(std::vector<double> values, double p);

double mean(const std::vector<double>& values);

/// Population variance (divides by n), so squared bias + variance equals
/// mean squared error exactly in study reports.
double population_variance(const std::vector<double>& values);

} // namespace crcop
