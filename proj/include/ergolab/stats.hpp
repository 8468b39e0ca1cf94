#pragma once

#include <span>
#include <vector>

namespace ergolab::stats {

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = slope * x + intercept. Needs >= 2 distinct x.
LinearFit least_squares(std::span<const double> x, std::span<const double> y);

// Slope of log(y) against log(x).
double log_log_slope(std::span<const double> x, std::span<const double> y);

double mean(std::span<const double> v);

// Unbiased sample variance; 0 for fewer than two samples.
double sample_variance(std::span<const double> v);

double standard_error(std::span<const double> v);

// Median of a copy; averages the middle pair for even sizes.
double median(std::vector<double> v);

}  // namespace ergolab::stats
