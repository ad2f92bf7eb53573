#pragma once

namespace ergo {

// Compensated accumulator; long horizons (N up to 1e9) need better than naive
// summation to keep streaming means at 1e-12 of their batch counterparts.
struct KahanSum {
  double s = 0.0, c = 0.0;
  void add(double x) {
    const double y = x - c;
    const double t = s + y;
    c = (t - s) - y;
    s = t;
  }
  double value() const { return s; }
};

}  // namespace ergo
