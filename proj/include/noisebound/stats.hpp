#ifndef NOISEBOUND_STATS_HPP
#define NOISEBOUND_STATS_HPP

#include <utility>
#include <vector>

namespace noisebound {

/// Wilson score interval for a binomial proportion at confidence level
/// given by the normal quantile z (default 95%).
std::pair<double, double> wilson_interval(int successes, int trials,
                                          double z = 1.959963984540054);

/// Standard normal CDF.
double normal_cdf(double x);

/// Inverse standard normal CDF, p in (0, 1). Acklam's rational
/// approximation polished with one Halley step; accurate to ~1e-15.
double normal_quantile(double p);

double median(std::vector<double> values);

}  // namespace noisebound

#endif
