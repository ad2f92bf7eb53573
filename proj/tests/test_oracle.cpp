#include <doctest.h>

#include <cmath>
#include <complex>

#include "ergo/estimators.hpp"
#include "ergo/fft.hpp"
#include "ergo/oracle.hpp"

using namespace ergo;

namespace {

// independent series oracle: I_nu(2) = sum_k 1 / (k! (k + nu)!)
double bessel_i(int nu, double z) {
  double sum = 0.0, term;
  for (int k = 0; k < 60; ++k) {
    term = 1.0;
    for (int i = 1; i <= k; ++i) term *= z / 2.0 / i;
    for (int i = 1; i <= k + nu; ++i) term *= z / 2.0 / i;
    sum += term;
  }
  return sum;
}

const double kGrad1dCosMean = bessel_i(1, 2.0) / bessel_i(0, 2.0);

}  // namespace

TEST_SUITE("oracle") {

TEST_CASE("fft round trip and band-limited analysis") {
  // analyze a known trig polynomial: 0.5 + cos x - 2 sin 3x
  const int n = 64;
  std::vector<cplx> samples(n);
  for (int j = 0; j < n; ++j) {
    const double x = kTwoPi * j / n;
    samples[static_cast<size_t>(j)] = 0.5 + std::cos(x) - 2.0 * std::sin(3.0 * x);
  }
  const auto coeffs = fft_coefficients_1d(samples);
  CHECK(std::abs(coeffs[0] - cplx(0.5, 0.0)) <= 1e-13);
  CHECK(std::abs(coeffs[1] - cplx(0.5, 0.0)) <= 1e-13);            // cos x / 2
  CHECK(std::abs(coeffs[3] - cplx(0.0, 1.0)) <= 1e-13);            // -2 sin 3x -> +i
  CHECK(std::abs(coeffs[static_cast<size_t>(n - 3)] - cplx(0.0, -1.0)) <= 1e-13);
  const auto back = fft_synthesize_1d(coeffs);
  for (int j = 0; j < n; ++j)
    CHECK(std::abs(back[static_cast<size_t>(j)] - samples[static_cast<size_t>(j)]) <= 1e-12);
}

TEST_CASE("gibbs_average: normalization, symmetry, and the Bessel ratio") {
  const SdeProblem grad1d = problem_by_id("grad1d");
  const SdeProblem zero1d = problem_by_id("zero1d");
  const Observable one = observable_by_id("const", 1);
  const Observable cosx = observable_by_id("cos_1", 1);

  CHECK(gibbs_average(grad1d, one) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(std::abs(gibbs_average(zero1d, cosx)) <= 1e-14);  // uniform law

  const double phi_bar = gibbs_average(grad1d, cosx);
  CHECK(std::abs(phi_bar - kGrad1dCosMean) <= 1e-12);
  CHECK(phi_bar == doctest::Approx(0.697775).epsilon(2e-6));
}

TEST_CASE("gibbs_average rejects non-gradient problems") {
  const SdeProblem hypo2d = problem_by_id("hypo2d");
  const Observable obs = observable_by_id("cos_1_0", 2);
  CHECK_THROWS_WITH_AS(gibbs_average(hypo2d, obs), "not a gradient problem",
                       std::invalid_argument);
  const SdeProblem grad1d = problem_by_id("grad1d");
  CHECK_THROWS_AS(gibbs_average(grad1d, observable_by_id("cos_1", 1), 100),
                  std::invalid_argument);  // quadrature too coarse
}

TEST_CASE("zero1d density is uniform") {
  const SpectralDensity density = solve_stationary_density(problem_by_id("zero1d"));
  const int idx0 = density.box.index(0);
  CHECK(std::abs(density.coeffs[static_cast<size_t>(idx0)] - cplx(1.0 / kTwoPi, 0.0)) <= 1e-15);
  for (int k = -density.box.cutoff; k <= density.box.cutoff; ++k) {
    if (k == 0) continue;
    CHECK(std::abs(density.coeffs[static_cast<size_t>(density.box.index(k))]) <= 1e-12);
  }
  CHECK(density.residual_norm <= 1e-10);
}

TEST_CASE("grad1d density matches the closed-form Gibbs density pointwise") {
  const SpectralDensity density = solve_stationary_density(problem_by_id("grad1d"), 64);
  const auto values = density_grid_values(density);
  const int n = density.grid_n();
  const double z = kTwoPi * bessel_i(0, 2.0);
  double max_err = 0.0;
  for (int j = 0; j < n; ++j) {
    const double x = kTwoPi * j / n;
    max_err = std::max(max_err, std::abs(values[static_cast<size_t>(j)] - std::exp(2.0 * std::cos(x)) / z));
  }
  INFO("pointwise error = ", max_err);
  CHECK(max_err <= 1e-8);
  CHECK(density.residual_norm <= 1e-8);
}

TEST_CASE("hypo2d stationary density is uniform (transport in x1, drifted diffusion in x2)") {
  const SpectralDensity density = solve_stationary_density(problem_by_id("hypo2d"));
  double off_mass = 0.0;
  for (int k1 = -density.box.cutoff; k1 <= density.box.cutoff; ++k1)
    for (int k2 = -density.box.cutoff; k2 <= density.box.cutoff; ++k2) {
      if (k1 == 0 && k2 == 0) continue;
      off_mass = std::max(off_mass, std::abs(density.coeffs[static_cast<size_t>(density.box.index(k1, k2))]));
    }
  CHECK(off_mass <= 1e-10);
  CHECK(density.residual_norm <= 1e-8);
}

TEST_CASE("catalog densities: residuals, positivity, symmetry, normalization") {
  for (const auto& id : catalog_ids()) {
    const SdeProblem problem = problem_by_id(id);
    const SpectralDensity density = solve_stationary_density(problem);
    INFO("problem = ", id, " residual = ", density.residual_norm);
    CHECK(density.residual_norm <= 1e-8);

    const auto values = density_grid_values(density);
    double min_val = 1e300;
    for (double v : values) min_val = std::min(min_val, v);
    CHECK(min_val >= -1e-6);

    const int idx0 = density.box.index(0, 0);
    CHECK(density.coeffs[static_cast<size_t>(idx0)].real() ==
          doctest::Approx(std::pow(kTwoPi, -problem.d)).epsilon(1e-14));

    // conjugate symmetry
    if (problem.d == 1) {
      for (int k = 1; k <= density.box.cutoff; ++k) {
        const cplx a = density.coeffs[static_cast<size_t>(density.box.index(k))];
        const cplx b = density.coeffs[static_cast<size_t>(density.box.index(-k))];
        CHECK(std::abs(a - std::conj(b)) <= 1e-15);
      }
    }
  }
}

TEST_CASE("stationary_average: orthogonality, constants, and the grad1d mean") {
  const SpectralDensity uniform = solve_stationary_density(problem_by_id("zero1d"));
  CHECK(std::abs(stationary_average(uniform, observable_by_id("cos_1", 1))) <= 1e-12);
  CHECK(stationary_average(uniform, observable_by_id("const", 1)) ==
        doctest::Approx(1.0).epsilon(1e-13));

  const SdeProblem grad1d = problem_by_id("grad1d");
  const SpectralDensity density = solve_stationary_density(grad1d, 64);
  const double spectral = stationary_average(density, observable_by_id("cos_1", 1));
  CHECK(std::abs(spectral - gibbs_average(grad1d, observable_by_id("cos_1", 1))) <= 1e-8);
  CHECK(std::abs(spectral - kGrad1dCosMean) <= 1e-8);
}

TEST_CASE("oracle consistency for several observables on grad1d") {
  const SdeProblem grad1d = problem_by_id("grad1d");
  const SpectralDensity density = solve_stationary_density(grad1d, 64);
  for (const auto* id : {"cos_1", "sin_1", "cos_2"}) {
    const Observable obs = observable_by_id(id, 1);
    CHECK(std::abs(stationary_average(density, obs) - gibbs_average(grad1d, obs)) <= 1e-8);
  }
}

TEST_CASE("zero1d Poisson solution is -2 cos x") {
  const SdeProblem zero1d = problem_by_id("zero1d");
  const SpectralDensity density = solve_stationary_density(zero1d);
  const PoissonSolution psi = solve_poisson(zero1d, observable_by_id("cos_1", 1), density);
  CHECK(std::abs(psi.phi_bar) <= 1e-12);
  // -2 cos x has coefficients -1 at k = +-1
  const cplx c1 = psi.coeffs[static_cast<size_t>(psi.box.index(1))];
  const cplx cm1 = psi.coeffs[static_cast<size_t>(psi.box.index(-1))];
  CHECK(std::abs(c1 - cplx(-1.0, 0.0)) <= 1e-10);
  CHECK(std::abs(cm1 - cplx(-1.0, 0.0)) <= 1e-10);
  CHECK(psi.residual_norm <= 1e-10);
  CHECK(psi.gauge <= 1e-10);
}

TEST_CASE("constant observable gives the zero Poisson solution") {
  const SdeProblem grad1d = problem_by_id("grad1d");
  const SpectralDensity density = solve_stationary_density(grad1d);
  const PoissonSolution psi = solve_poisson(grad1d, observable_by_id("const", 1), density);
  for (const auto& c : psi.coeffs) CHECK(std::abs(c) <= 1e-12);
  CHECK(psi.residual_norm <= 1e-10);
}

TEST_CASE("poisson residuals are tiny on every catalog problem (phi = cos x1)") {
  for (const auto& id : catalog_ids()) {
    const SdeProblem problem = problem_by_id(id);
    const SpectralDensity density = solve_stationary_density(problem);
    const Observable obs = observable_by_id(problem.d == 1 ? "cos_1" : "cos_1_0", problem.d);
    const PoissonSolution psi = solve_poisson(problem, obs, density);
    INFO("problem = ", id, " residual = ", psi.residual_norm, " gauge = ", psi.gauge);
    CHECK(psi.residual_norm <= 1e-8);
    CHECK(psi.gauge <= 1e-10);
  }
}

TEST_CASE("wrong phi_bar is rejected as a singular system") {
  const SdeProblem grad1d = problem_by_id("grad1d");
  const SpectralDensity density = solve_stationary_density(grad1d);
  CHECK_THROWS_WITH_AS(
      solve_poisson(grad1d, observable_by_id("cos_1", 1), density, kGrad1dCosMean + 0.1),
      "singular system", std::runtime_error);
}

TEST_CASE("degenerate operator reports a missing spectral gap") {
  SdeProblem frozen;  // no drift, no noise: everything is invariant
  frozen.d = 1;
  frozen.m = 1;
  frozen.catalog_id = "frozen";
  frozen.drift = [](const TorusPoint&) { return SmallVec{0.0}; };
  frozen.diffusion = [](const TorusPoint&) { return SmallMat(1, 1); };
  frozen.lipschitz_bound = 0.0;
  frozen.constant_diffusion = true;
  CHECK_THROWS_WITH_AS(solve_stationary_density(frozen, 16), "no spectral gap at cutoff",
                       std::runtime_error);
}

TEST_CASE("asymptotic variance: closed forms and positivity") {
  const SdeProblem zero1d = problem_by_id("zero1d");
  const SpectralDensity uniform = solve_stationary_density(zero1d);
  const Observable cosx = observable_by_id("cos_1", 1);
  const PoissonSolution psi0 = solve_poisson(zero1d, cosx, uniform);
  // psi = -2 cos -> psi' = 2 sin -> int (2 sin)^2 / (2 pi) = 2
  CHECK(asymptotic_variance(zero1d, psi0, uniform) == doctest::Approx(2.0).epsilon(1e-10));

  const PoissonSolution psi_const = solve_poisson(zero1d, observable_by_id("const", 1), uniform);
  CHECK(asymptotic_variance(zero1d, psi_const, uniform) <= 1e-12);

  const SdeProblem grad1d = problem_by_id("grad1d");
  const SpectralDensity density = solve_stationary_density(grad1d);
  const PoissonSolution psi1 = solve_poisson(grad1d, cosx, density);
  CHECK(asymptotic_variance(grad1d, psi1, density) > 0.0);
}

TEST_CASE("doubling the cutoff moves phi_bar by less than 1e-9") {
  const SdeProblem grad1d = problem_by_id("grad1d");
  const Observable cosx = observable_by_id("cos_1", 1);
  const double coarse = stationary_average(solve_stationary_density(grad1d, 32), cosx);
  const double fine = stationary_average(solve_stationary_density(grad1d, 64), cosx);
  CHECK(std::abs(coarse - fine) <= 1e-9);

  const SdeProblem nongrad = problem_by_id("nongrad2d");
  const Observable obs2 = observable_by_id("cos_1_0", 2);
  const double coarse2 = stationary_average(solve_stationary_density(nongrad, 16), obs2);
  const double fine2 = stationary_average(solve_stationary_density(nongrad, 32), obs2);
  CHECK(std::abs(coarse2 - fine2) <= 1e-9);
}

TEST_CASE("nongrad2d spectral averages agree with a long simulation") {
  const SdeProblem problem = problem_by_id("nongrad2d");
  const SpectralDensity density = solve_stationary_density(problem);
  const Observable obs = observable_by_id("cos_1_0", 2);
  const double oracle = stationary_average(density, obs);

  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  // T = 1e5 at delta = 0.005
  const EstimatorResult sim = run_time_average(problem, em, gauss, obs, TorusPoint::origin(2),
                                               0.005, 20000000, 32, RngStream{99, 77, 0});
  INFO("oracle=", oracle, " sim=", sim.value, " ci=", sim.ci_halfwidth);
  CHECK(std::abs(sim.value - oracle) <= sim.ci_halfwidth + 0.01);
}

}  // TEST_SUITE
