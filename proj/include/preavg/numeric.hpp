#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <string>

namespace preavg {

inline double normal_pdf(double y) {
  return 0.3989422804014327 * std::exp(-0.5 * y * y);
}

inline double normal_cdf(double y) {
  return 0.5 * std::erfc(-y * 0.7071067811865476);
}

// Inverse of the standard normal CDF (Boost.Math behind the scenes).
double normal_quantile(double p);

// Summation in a fixed tree order, independent of how the values were
// produced; used wherever Monte Carlo reductions must be bit-stable
// across worker counts.
double pairwise_sum(std::span<const double> v);

double sample_mean(std::span<const double> v);

// %.17g round-trip formatting for tabular output.
std::string format_g17(double v);

// Runs fn(0..count-1) on up to `workers` threads (0 = hardware concurrency).
// Work items write to disjoint slots, so scheduling never affects results.
// The first exception thrown by any item is rethrown on the caller.
void parallel_for(long count, int workers, const std::function<void(long)>& fn);

}  // namespace preavg
