#pragma once

#include <cstddef>
#include <vector>

namespace ergo {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 1.0;
  std::size_t n_used = 0;
};

// Ordinary least squares of y on x.
LineFit ols(const std::vector<double>& x, const std::vector<double>& y);

// OLS of log(error) on log(param). Points with error <= exclude_below_factor *
// stderr are statistically indistinguishable from zero and are dropped before
// fitting; the returned mask marks the points used. Throws
// std::runtime_error("all points noise-dominated") when fewer than min_points
// survive.
LineFit loglog_fit(const std::vector<double>& param, const std::vector<double>& error,
                   const std::vector<double>& error_stderr, std::vector<bool>* used_mask = nullptr,
                   double exclude_below_factor = 2.0, std::size_t min_points = 3);

}  // namespace ergo
