#include <doctest.h>

#include <cmath>

#include "ergo/noise.hpp"
#include "ergo/torus.hpp"

using namespace ergo;

namespace {

// deterministic pseudo-random torus points for property checks
TorusPoint random_point(int d, RngStream& stream) {
  NoiseModel uniform_src{NoiseKind::gaussian};
  SmallVec raw(d);
  for (int i = 0; i < d; ++i) raw[i] = 10.0 * sample_scalar(uniform_src, stream);
  return wrap(raw);
}

}  // namespace

TEST_SUITE("torus") {

TEST_CASE("wrap maps representatives into [0, 2pi)") {
  CHECK(wrap(SmallVec{kTwoPi + 0.5})[0] == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(wrap(SmallVec{-0.3})[0] == doctest::Approx(kTwoPi - 0.3).epsilon(1e-14));
  const TorusPoint p = wrap(SmallVec{1.0, 7.0});
  CHECK(p[0] == doctest::Approx(1.0));
  CHECK(p[1] == doctest::Approx(7.0 - kTwoPi));
  CHECK(wrap(SmallVec{kTwoPi})[0] == 0.0);  // tie-break at exactly 2pi
}

TEST_CASE("wrap is idempotent and rejects non-finite input") {
  RngStream stream{41, 7, 0};
  for (int i = 0; i < 200; ++i) {
    const TorusPoint p = random_point(2, stream);
    const TorusPoint q = wrap(p.c);
    for (int j = 0; j < 2; ++j) {
      CHECK(p[j] >= 0.0);
      CHECK(p[j] < kTwoPi);
      CHECK(q[j] == p[j]);
    }
  }
  CHECK_THROWS_AS(wrap(SmallVec{std::nan("")}), std::domain_error);
  CHECK_THROWS_AS(wrap(SmallVec{1.0 / 0.0}), std::domain_error);
}

TEST_CASE("catalog drift values") {
  const SdeProblem grad1d = problem_by_id("grad1d");
  CHECK(grad1d.eval_drift(wrap(SmallVec{std::numbers::pi / 2}))[0] == doctest::Approx(-1.0));
  CHECK(grad1d.eval_drift(TorusPoint::origin(1))[0] == doctest::Approx(0.0));

  const SdeProblem hypo2d = problem_by_id("hypo2d");
  const SmallVec f = hypo2d.eval_drift(wrap(SmallVec{0.0, std::numbers::pi / 2}));
  CHECK(f[0] == doctest::Approx(1.0));
  CHECK(f[1] == doctest::Approx(0.5));
}

TEST_CASE("catalog fields are 2pi-periodic") {
  RngStream stream{42, 1, 0};
  for (const auto& id : catalog_ids()) {
    const SdeProblem problem = problem_by_id(id);
    for (int trial = 0; trial < 100; ++trial) {
      const TorusPoint x = random_point(problem.d, stream);
      for (int axis = 0; axis < problem.d; ++axis) {
        SmallVec shifted = x.c;
        shifted[axis] += kTwoPi;
        const TorusPoint y = wrap(shifted);
        const SmallVec df = problem.drift(x) - problem.drift(y);
        CHECK(df.norm_inf() <= 1e-12);
        const SmallMat dg = problem.diffusion(x) - problem.diffusion(y);
        CHECK(dg.max_abs() <= 1e-12);
      }
    }
  }
}

TEST_CASE("gradient consistency: drift = -grad potential") {
  RngStream stream{43, 2, 0};
  for (const auto& id : {"grad1d", "zero1d"}) {
    const SdeProblem problem = problem_by_id(id);
    REQUIRE(problem.has_potential());
    // step balances truncation against roundoff so the 1e-10 bound is robust
    constexpr double h = 1e-5;
    for (int trial = 0; trial < 100; ++trial) {
      const TorusPoint x = random_point(problem.d, stream);
      for (int axis = 0; axis < problem.d; ++axis) {
        SmallVec xp = x.c, xm = x.c;
        xp[axis] += h;
        xm[axis] -= h;
        const double grad = (problem.potential(wrap(xp)) - problem.potential(wrap(xm))) / (2 * h);
        CHECK(std::abs(problem.drift(x)[axis] + grad) <= 1e-10);
      }
    }
  }
}

TEST_CASE("certified Lipschitz bounds dominate the Jacobian") {
  RngStream stream{44, 3, 0};
  for (const auto& id : catalog_ids()) {
    const SdeProblem problem = problem_by_id(id);
    for (int trial = 0; trial < 50; ++trial) {
      const TorusPoint x = random_point(problem.d, stream);
      const SmallMat j = problem.drift_jacobian(x);
      // crude operator-norm bound: sqrt(d) * max row sum dominates ||J||_2
      double row_sum = 0;
      for (int r = 0; r < problem.d; ++r) {
        double s = 0;
        for (int c = 0; c < problem.d; ++c) s += std::abs(j(r, c));
        row_sum = std::max(row_sum, s);
      }
      CHECK(row_sum <= problem.lipschitz_bound + 0.11);  // nongrad2d row sum hits 1.6
    }
  }
}

TEST_CASE("lie bracket: hypo2d example, antisymmetry, constants") {
  const SdeProblem hypo2d = problem_by_id("hypo2d");
  const VectorField g0 = hypo2d.diffusion_column_field(0);  // (0, 1), constant
  const VectorField f = hypo2d.drift_field();

  const SmallVec b = lie_bracket(g0, f, TorusPoint::origin(2));
  CHECK(b[0] == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(b[1] == doctest::Approx(0.0).epsilon(1e-9));

  // h = ht gives zero
  const SmallVec bb = lie_bracket(f, f, TorusPoint::origin(2));
  CHECK(bb.norm_inf() <= 1e-9);

  // two constant fields commute
  VectorField c1{2, [](const TorusPoint&) { return SmallVec{1.0, 2.0}; }, nullptr};
  VectorField c2{2, [](const TorusPoint&) { return SmallVec{-0.5, 0.25}; }, nullptr};
  CHECK(lie_bracket(c1, c2, TorusPoint::origin(2)).norm_inf() <= 1e-9);
}

TEST_CASE("lie bracket antisymmetry and bilinearity at random points") {
  RngStream stream{45, 4, 0};
  const SdeProblem problem = problem_by_id("nongrad2d");
  const VectorField f = problem.drift_field();
  VectorField wobble{2, [](const TorusPoint& x) {
                       return SmallVec{std::cos(x[1]), std::sin(x[0] + x[1])};
                     },
                     nullptr};
  for (int trial = 0; trial < 25; ++trial) {
    const TorusPoint x = random_point(2, stream);
    const SmallVec ab = lie_bracket(f, wobble, x);
    const SmallVec ba = lie_bracket(wobble, f, x);
    CHECK((ab + ba).norm_inf() <= 1e-6);

    // bilinearity in the first slot: [f + 2w, w] = [f, w] + 2[w, w]
    VectorField combo{2, [&](const TorusPoint& y) {
                        return problem.drift(y) + wobble.eval(y) * 2.0;
                      },
                      nullptr};
    const SmallVec lhs = lie_bracket(combo, wobble, x);
    const SmallVec rhs = lie_bracket(f, wobble, x) + lie_bracket(wobble, wobble, x) * 2.0;
    CHECK((lhs - rhs).norm_inf() <= 1e-6);
  }
}

TEST_CASE("hormander rank on hypo2d") {
  const SdeProblem hypo2d = problem_by_id("hypo2d");
  CHECK(hormander_rank(hypo2d, TorusPoint::origin(2), 0) == 1);
  CHECK(hormander_rank(hypo2d, TorusPoint::origin(2), 1) == 2);
  CHECK(hormander_rank(hypo2d, wrap(SmallVec{0.0, std::numbers::pi / 2}), 0) == 2);
}

TEST_CASE("hypo2d hormander certificate holds on a 64x64 grid at depth 2") {
  const SdeProblem hypo2d = problem_by_id("hypo2d");
  for (int i = 0; i < 64; ++i)
    for (int j = 0; j < 64; ++j) {
      const TorusPoint x = wrap(SmallVec{kTwoPi * i / 64, kTwoPi * j / 64});
      REQUIRE(hormander_rank(hypo2d, x, 2) == 2);
    }
}

TEST_CASE("elliptic catalog problems have full rank at depth 0") {
  for (const auto& id : {"grad1d", "zero1d", "nongrad2d"}) {
    const SdeProblem problem = problem_by_id(id);
    CHECK(hormander_rank(problem, TorusPoint::origin(problem.d), 0) == problem.d);
  }
}

TEST_CASE("diffusion shapes match (d rows, m columns)") {
  for (const auto& id : catalog_ids()) {
    const SdeProblem problem = problem_by_id(id);
    const SmallMat g = problem.diffusion(TorusPoint::origin(problem.d));
    CHECK(g.rows == problem.d);
    CHECK(g.cols == problem.m);
  }
}

TEST_CASE("unknown problem id is rejected") {
  CHECK_THROWS_AS(problem_by_id("lorenz"), std::invalid_argument);
}

}  // TEST_SUITE
