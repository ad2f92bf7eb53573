#pragma once

#include <functional>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "ergo/smallvec.hpp"

namespace ergo {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

// A point on T^d with every coordinate in [0, 2*pi). Construct via wrap().
struct TorusPoint {
  SmallVec c;

  TorusPoint() = default;
  static TorusPoint origin(int d) {
    TorusPoint p;
    p.c = SmallVec::zeros(d);
    return p;
  }

  int dim() const { return c.n; }
  double operator[](int i) const { return c[i]; }
};

// Reduce mod 2*pi into [0, 2*pi); a value landing exactly on 2*pi maps to 0.
// Throws std::domain_error("non-finite state") on non-finite input, which is
// how a blown-up trajectory surfaces.
TorusPoint wrap(const SmallVec& raw);
double wrap_scalar(double x);

using ScalarField = std::function<double(const TorusPoint&)>;
using VectorFieldFn = std::function<SmallVec(const TorusPoint&)>;
using MatrixFieldFn = std::function<SmallMat(const TorusPoint&)>;

// A vector field with an optional analytic Jacobian; central finite
// differences (step 1e-5) fill in when the Jacobian is absent.
struct VectorField {
  int d = 0;
  VectorFieldFn eval;
  MatrixFieldFn jacobian;  // may be empty
};

SmallMat field_jacobian(const VectorField& h, const TorusPoint& x);

// [h, ht](x) = (h . grad ht)(x) - (ht . grad h)(x)
SmallVec lie_bracket(const VectorField& h, const VectorField& ht, const TorusPoint& x);

// dX = f(X) dt + g(X) dW on T^d, f: T^d -> R^d, g: T^d -> R^{d x m}.
struct SdeProblem {
  int d = 1;
  int m = 1;
  VectorFieldFn drift;
  MatrixFieldFn diffusion;
  MatrixFieldFn drift_jacobian;  // optional
  ScalarField potential;         // optional; when set, drift = -grad potential
  double lipschitz_bound = 0.0;  // certified Lipschitz constant of the drift
  bool constant_diffusion = false;
  std::string catalog_id;

  bool has_potential() const { return static_cast<bool>(potential); }
  bool has_drift_jacobian() const { return static_cast<bool>(drift_jacobian); }

  SmallVec eval_drift(const TorusPoint& x) const { return drift(x); }
  SmallMat eval_diffusion(const TorusPoint& x) const { return diffusion(x); }
  // a(x) = g(x) g(x)^T
  SmallMat eval_covariance(const TorusPoint& x) const { return diffusion(x).gram(); }

  VectorField drift_field() const;
  VectorField diffusion_column_field(int k) const;
};

// Fixed test problems, addressable by id: "grad1d", "zero1d", "nongrad2d", "hypo2d".
SdeProblem problem_by_id(const std::string& id);
std::vector<std::string> catalog_ids();

// Numerical rank of the bracket-generated family Lambda_depth(x):
// Lambda_0 = {f, g^(1), ..., g^(m)},
// Lambda_{n+1} = Lambda_n  u  { [hbar, h] : h in Lambda_n, hbar in Lambda_0 }.
// Rank counts singular values above 1e-8 of the field values stacked at x.
int hormander_rank(const SdeProblem& problem, const TorusPoint& x, int depth);

}  // namespace ergo
