#include "ergo/ratefit.hpp"

#include <cmath>
#include <stdexcept>

namespace ergo {

LineFit ols(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("ols: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw std::invalid_argument("ols: need at least 2 points");

  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);

  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  if (sxx == 0.0) throw std::invalid_argument("ols: degenerate abscissae");

  LineFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.n_used = n;
  if (syy == 0.0) {
    fit.r2 = 1.0;  // perfectly flat data is perfectly fit
  } else {
    double ss_res = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double r = y[i] - (fit.intercept + fit.slope * x[i]);
      ss_res += r * r;
    }
    fit.r2 = 1.0 - ss_res / syy;
  }
  return fit;
}

LineFit loglog_fit(const std::vector<double>& param, const std::vector<double>& error,
                   const std::vector<double>& error_stderr, std::vector<bool>* used_mask,
                   double exclude_below_factor, std::size_t min_points) {
  if (param.size() != error.size() || param.size() != error_stderr.size())
    throw std::invalid_argument("loglog_fit: size mismatch");

  std::vector<double> lx, ly;
  std::vector<bool> mask(param.size(), false);
  for (std::size_t i = 0; i < param.size(); ++i) {
    if (!(error[i] > 0.0)) continue;  // zero errors cannot be log-fitted
    if (error[i] <= exclude_below_factor * error_stderr[i]) continue;
    mask[i] = true;
    lx.push_back(std::log(param[i]));
    ly.push_back(std::log(error[i]));
  }
  if (used_mask) *used_mask = mask;
  if (lx.size() < min_points) throw std::runtime_error("all points noise-dominated");
  return ols(lx, ly);
}

}  // namespace ergo
