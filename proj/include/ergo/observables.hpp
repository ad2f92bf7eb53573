#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ergo/torus.hpp"

namespace ergo {

// Bounded test function on the torus. The catalog is trigonometric:
//   "const"               -> 1
//   "cos_k1[_k2]"         -> cos(k . x)
//   "sin_k1[_k2]"         -> sin(k . x)
// e.g. "cos_1" = cos x, "cos_2" = cos 2x, "cos_1_0" = cos x1, "sin_1_-1" =
// sin(x1 - x2). Frequency vectors cover products of single-axis waves.
struct Observable {
  std::string label;
  ScalarField eval;
  double sup_norm = 1.0;
  bool is_trig = false;
  SmallVec freq;  // only meaningful when is_trig

  double operator()(const TorusPoint& x) const { return eval(x); }

  // max_{|alpha| <= order} sup |D^alpha phi|; for cos/sin(k.x) this is
  // max(1, max_i |k_i|)^order. Used to normalize dictionary members.
  double derivative_norm(int order) const;
};

Observable observable_by_id(const std::string& id, int d);

// The fixed 8-member dictionary standing in for the unit ball of H in the
// stationary-distance proxy.
std::vector<Observable> distance_dictionary(int d);

}  // namespace ergo
