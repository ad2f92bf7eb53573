#pragma once

#include <complex>
#include <optional>
#include <vector>

#include "ergo/fft.hpp"
#include "ergo/observables.hpp"
#include "ergo/torus.hpp"

namespace ergo {

// Frequency box [-cutoff, cutoff]^d with flattened indexing.
struct FreqBox {
  int d = 1;
  int cutoff = 0;

  int per_axis() const { return 2 * cutoff + 1; }
  int size() const {
    int n = 1;
    for (int i = 0; i < d; ++i) n *= per_axis();
    return n;
  }
  int index(int k1, int k2 = 0) const {
    const int L = per_axis();
    return d == 1 ? (k1 + cutoff) : (k1 + cutoff) * L + (k2 + cutoff);
  }
  bool contains(int k1, int k2 = 0) const {
    return std::abs(k1) <= cutoff && (d == 1 || std::abs(k2) <= cutoff);
  }
};

int default_cutoff(int d);  // 64 for d = 1, 32 for d = 2

// Truncated Fourier representation of the stationary density: mu(x) =
// sum_k coeffs[k] e^{i k.x}, zero mode pinned to its normalization value
// (2*pi)^{-d}. residual_norm is the sup over a 4*cutoff grid of the
// untruncated adjoint generator applied to the reconstruction.
struct SpectralDensity {
  FreqBox box;
  std::vector<cplx> coeffs;
  double residual_norm = 0.0;

  int grid_n() const { return next_pow2(4 * box.cutoff); }
};

// Truncated Fourier representation of psi solving L psi = phi - phi_bar with
// gauge int psi dmu = 0.
struct PoissonSolution {
  FreqBox box;
  std::vector<cplx> coeffs;
  double phi_bar = 0.0;
  double residual_norm = 0.0;  // sup_x |L psi - (phi - phi_bar)| on the grid
  double gauge = 0.0;          // |int psi dmu| after gauge fixing
};

// Stationary average for gradient problems with scalar constant diffusion
// sigma: phi_bar = int phi e^{-2V/sigma^2} / int e^{-2V/sigma^2}, trapezoidal
// quadrature with n_quad >= 256 points per axis (spectrally accurate for
// smooth periodic integrands). Throws "not a gradient problem" otherwise.
double gibbs_average(const SdeProblem& problem, const Observable& observable, int n_quad = 512);

// Fourier-Galerkin null vector of the truncated adjoint generator, pinned to
// unit mass. Throws "no spectral gap at cutoff" when the null space is not
// cleanly one-dimensional at this truncation.
SpectralDensity solve_stationary_density(const SdeProblem& problem, int cutoff = 0);

// int phi dmu by grid quadrature of the reconstruction (exact for
// trigonometric phi inside the cutoff).
double stationary_average(const SpectralDensity& density, const Observable& observable);

// Galerkin solve of L psi = phi - phi_bar on the complement of constants.
// phi_bar defaults to stationary_average(density, observable); passing an
// inconsistent value (projection of the right-hand side onto the null space
// beyond 1e-8) raises "singular system".
PoissonSolution solve_poisson(const SdeProblem& problem, const Observable& observable,
                              const SpectralDensity& density,
                              std::optional<double> phi_bar = std::nullopt);

// sigma^2_inf = int |g^T grad psi|^2 dmu, the CLT rate for T * Var(phi_hat).
double asymptotic_variance(const SdeProblem& problem, const PoissonSolution& poisson,
                           const SpectralDensity& density);

// Reconstruction of the density on the uniform grid (grid_n points per axis);
// used by quadratures and the nonnegativity check.
std::vector<double> density_grid_values(const SpectralDensity& density);

}  // namespace ergo
