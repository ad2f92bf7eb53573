#include "ergo/torus.hpp"

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

namespace ergo {

double wrap_scalar(double x) {
  if (!std::isfinite(x)) throw std::domain_error("non-finite state");
  double y = std::fmod(x, kTwoPi);
  if (y < 0) y += kTwoPi;
  if (y >= kTwoPi) y = 0.0;  // fmod can land on 2*pi after the shift
  return y;
}

TorusPoint wrap(const SmallVec& raw) {
  TorusPoint p;
  p.c = SmallVec(raw.n);
  for (int i = 0; i < raw.n; ++i) p.c[i] = wrap_scalar(raw[i]);
  return p;
}

namespace {
constexpr double kFdStep = 1e-5;

SmallMat fd_jacobian(const VectorFieldFn& f, const TorusPoint& x, int d) {
  SmallMat jac(d, d);
  for (int j = 0; j < d; ++j) {
    SmallVec xp = x.c, xm = x.c;
    xp[j] += kFdStep;
    xm[j] -= kFdStep;
    const SmallVec fp = f(wrap(xp));
    const SmallVec fm = f(wrap(xm));
    for (int i = 0; i < d; ++i) jac(i, j) = (fp[i] - fm[i]) / (2.0 * kFdStep);
  }
  return jac;
}
}  // namespace

SmallMat field_jacobian(const VectorField& h, const TorusPoint& x) {
  if (h.jacobian) return h.jacobian(x);
  return fd_jacobian(h.eval, x, h.d);
}

SmallVec lie_bracket(const VectorField& h, const VectorField& ht, const TorusPoint& x) {
  const SmallMat jh = field_jacobian(h, x);
  const SmallMat jht = field_jacobian(ht, x);
  const SmallVec hv = h.eval(x);
  const SmallVec htv = ht.eval(x);
  return jht.apply(hv) - jh.apply(htv);
}

VectorField SdeProblem::drift_field() const {
  VectorField vf;
  vf.d = d;
  vf.eval = drift;
  vf.jacobian = drift_jacobian;  // empty falls back to finite differences
  return vf;
}

VectorField SdeProblem::diffusion_column_field(int k) const {
  VectorField vf;
  vf.d = d;
  vf.eval = [g = diffusion, k](const TorusPoint& x) { return g(x).col(k); };
  return vf;
}

namespace {

SdeProblem make_grad1d() {
  SdeProblem p;
  p.d = 1;
  p.m = 1;
  p.catalog_id = "grad1d";
  p.drift = [](const TorusPoint& x) { return SmallVec{-std::sin(x[0])}; };
  p.diffusion = [](const TorusPoint&) {
    SmallMat g(1, 1);
    g(0, 0) = 1.0;
    return g;
  };
  p.drift_jacobian = [](const TorusPoint& x) {
    SmallMat j(1, 1);
    j(0, 0) = -std::cos(x[0]);
    return j;
  };
  p.potential = [](const TorusPoint& x) { return -std::cos(x[0]); };
  p.lipschitz_bound = 1.0;
  p.constant_diffusion = true;
  return p;
}

SdeProblem make_zero1d() {
  SdeProblem p;
  p.d = 1;
  p.m = 1;
  p.catalog_id = "zero1d";
  p.drift = [](const TorusPoint&) { return SmallVec{0.0}; };
  p.diffusion = [](const TorusPoint&) {
    SmallMat g(1, 1);
    g(0, 0) = 1.0;
    return g;
  };
  p.drift_jacobian = [](const TorusPoint&) { return SmallMat(1, 1); };
  p.potential = [](const TorusPoint&) { return 0.0; };
  p.lipschitz_bound = 0.0;
  p.constant_diffusion = true;
  return p;
}

SdeProblem make_nongrad2d() {
  SdeProblem p;
  p.d = 2;
  p.m = 2;
  p.catalog_id = "nongrad2d";
  p.drift = [](const TorusPoint& x) {
    return SmallVec{-std::sin(x[0]) + 0.3 * std::sin(x[1] - x[0]), -std::sin(x[1])};
  };
  p.diffusion = [](const TorusPoint&) { return SmallMat::identity(2); };
  p.drift_jacobian = [](const TorusPoint& x) {
    SmallMat j(2, 2);
    j(0, 0) = -std::cos(x[0]) - 0.3 * std::cos(x[1] - x[0]);
    j(0, 1) = 0.3 * std::cos(x[1] - x[0]);
    j(1, 0) = 0.0;
    j(1, 1) = -std::cos(x[1]);
    return j;
  };
  p.lipschitz_bound = 1.5;
  p.constant_diffusion = true;
  return p;
}

SdeProblem make_hypo2d() {
  SdeProblem p;
  p.d = 2;
  p.m = 1;
  p.catalog_id = "hypo2d";
  p.drift = [](const TorusPoint& x) { return SmallVec{std::sin(x[1]), 0.5}; };
  p.diffusion = [](const TorusPoint&) {
    SmallMat g(2, 1);
    g(0, 0) = 0.0;
    g(1, 0) = 1.0;
    return g;
  };
  p.drift_jacobian = [](const TorusPoint& x) {
    SmallMat j(2, 2);
    j(0, 1) = std::cos(x[1]);
    return j;
  };
  p.lipschitz_bound = 1.0;
  p.constant_diffusion = true;
  return p;
}

}  // namespace

SdeProblem problem_by_id(const std::string& id) {
  if (id == "grad1d") return make_grad1d();
  if (id == "zero1d") return make_zero1d();
  if (id == "nongrad2d") return make_nongrad2d();
  if (id == "hypo2d") return make_hypo2d();
  throw std::invalid_argument("unknown problem id: " + id);
}

std::vector<std::string> catalog_ids() { return {"grad1d", "zero1d", "nongrad2d", "hypo2d"}; }

int hormander_rank(const SdeProblem& problem, const TorusPoint& x, int depth) {
  if (depth < 0 || depth > 3) throw std::invalid_argument("hormander_rank: depth must be in [0, 3]");

  std::vector<VectorField> base;
  base.push_back(problem.drift_field());
  for (int k = 0; k < problem.m; ++k) base.push_back(problem.diffusion_column_field(k));

  std::vector<VectorField> family = base;
  for (int level = 0; level < depth; ++level) {
    std::vector<VectorField> next = family;
    for (const VectorField& h : family) {
      for (const VectorField& hbar : base) {
        VectorField b;
        b.d = problem.d;
        // capture by value; bracket fields get finite-difference Jacobians
        b.eval = [h, hbar](const TorusPoint& y) { return lie_bracket(hbar, h, y); };
        next.push_back(std::move(b));
      }
    }
    family = std::move(next);
  }

  Eigen::MatrixXd values(problem.d, static_cast<Eigen::Index>(family.size()));
  for (size_t j = 0; j < family.size(); ++j) {
    const SmallVec val = family[j].eval(x);
    for (int i = 0; i < problem.d; ++i) values(i, static_cast<Eigen::Index>(j)) = val[i];
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(values);
  int rank = 0;
  for (Eigen::Index i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > 1e-8) ++rank;
  return rank;
}

}  // namespace ergo
