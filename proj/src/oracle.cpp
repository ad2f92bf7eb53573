#include "ergo/oracle.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <Eigen/SVD>
#include <cmath>
#include <stdexcept>

#include "ergo/kahan.hpp"

namespace ergo {

int default_cutoff(int d) { return d == 1 ? 64 : 32; }

namespace {

using SpMat = Eigen::SparseMatrix<cplx>;
using Triplet = Eigen::Triplet<cplx>;

struct TrigTerm {
  int q1 = 0, q2 = 0;
  cplx value;
};

// Frequency content of a smooth periodic function, via FFT on the working
// grid; tiny coefficients are dropped. Catalog fields are low-degree
// trigonometric polynomials, so the surviving support is a handful of modes.
std::vector<TrigTerm> analyze_function(const ScalarField& fn, int d, int grid_n) {
  std::vector<TrigTerm> terms;
  if (d == 1) {
    std::vector<cplx> samples(static_cast<size_t>(grid_n));
    for (int j = 0; j < grid_n; ++j) {
      TorusPoint x;
      x.c = SmallVec{kTwoPi * j / grid_n};
      samples[static_cast<size_t>(j)] = fn(x);
    }
    const auto coeffs = fft_coefficients_1d(std::move(samples));
    double cmax = 0;
    for (const auto& c : coeffs) cmax = std::max(cmax, std::abs(c));
    const double tol = std::max(1e-300, 1e-13 * cmax);
    for (int j = 0; j < grid_n; ++j) {
      const int k = j < grid_n / 2 ? j : j - grid_n;
      if (std::abs(coeffs[static_cast<size_t>(j)]) > tol)
        terms.push_back({k, 0, coeffs[static_cast<size_t>(j)]});
    }
  } else {
    std::vector<cplx> samples(static_cast<size_t>(grid_n) * grid_n);
    for (int jx = 0; jx < grid_n; ++jx)
      for (int jy = 0; jy < grid_n; ++jy) {
        TorusPoint x;
        x.c = SmallVec{kTwoPi * jx / grid_n, kTwoPi * jy / grid_n};
        samples[static_cast<size_t>(jx) * grid_n + jy] = fn(x);
      }
    const auto coeffs = fft_coefficients_2d(std::move(samples), grid_n);
    double cmax = 0;
    for (const auto& c : coeffs) cmax = std::max(cmax, std::abs(c));
    const double tol = std::max(1e-300, 1e-13 * cmax);
    for (int jx = 0; jx < grid_n; ++jx)
      for (int jy = 0; jy < grid_n; ++jy) {
        const int k1 = jx < grid_n / 2 ? jx : jx - grid_n;
        const int k2 = jy < grid_n / 2 ? jy : jy - grid_n;
        const cplx c = coeffs[static_cast<size_t>(jx) * grid_n + jy];
        if (std::abs(c) > tol) terms.push_back({k1, k2, c});
      }
  }
  return terms;
}

struct OperatorCoeffs {
  std::vector<std::vector<TrigTerm>> f;  // d entries
  std::vector<std::vector<TrigTerm>> a;  // d*d entries, row-major
};

OperatorCoeffs analyze_problem(const SdeProblem& problem, int grid_n) {
  OperatorCoeffs oc;
  const int d = problem.d;
  oc.f.resize(static_cast<size_t>(d));
  oc.a.resize(static_cast<size_t>(d) * d);
  for (int i = 0; i < d; ++i) {
    oc.f[static_cast<size_t>(i)] = analyze_function(
        [&problem, i](const TorusPoint& x) { return problem.drift(x)[i]; }, d, grid_n);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      oc.a[static_cast<size_t>(i) * d + j] = analyze_function(
          [&problem, i, j](const TorusPoint& x) { return problem.eval_covariance(x)(i, j); }, d,
          grid_n);
    }
  return oc;
}

void freq_components(const FreqBox& box, int idx, int& k1, int& k2) {
  const int L = box.per_axis();
  if (box.d == 1) {
    k1 = idx - box.cutoff;
    k2 = 0;
  } else {
    k1 = idx / L - box.cutoff;
    k2 = idx % L - box.cutoff;
  }
}

// Truncated generator L = f.grad + a:grad grad / 2 (adjoint = false) or its
// formal adjoint L* mu = -div(f mu) + grad grad : (a mu) / 2 (adjoint = true),
// acting on Fourier coefficients over the box.
SpMat assemble_operator([[maybe_unused]] const SdeProblem& problem, const FreqBox& box, const OperatorCoeffs& oc,
                        bool adjoint) {
  const int n = box.size();
  const int d = box.d;
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(n) * 16);

  for (int col = 0; col < n; ++col) {
    int kp1, kp2;
    freq_components(box, col, kp1, kp2);
    const double kp[2] = {static_cast<double>(kp1), static_cast<double>(kp2)};

    for (int j = 0; j < d; ++j) {
      for (const TrigTerm& t : oc.f[static_cast<size_t>(j)]) {
        const int k1 = kp1 + t.q1, k2 = kp2 + t.q2;
        if (!box.contains(k1, k2)) continue;
        const int row = box.index(k1, k2);
        const double kj = adjoint ? static_cast<double>(j == 0 ? k1 : k2) : kp[j];
        const cplx ik(0.0, kj);
        // forward: f_j (ik'_j); adjoint: -(ik_j) f_j
        triplets.emplace_back(row, col, adjoint ? -ik * t.value : t.value * ik);
      }
    }
    for (int j = 0; j < d; ++j)
      for (int l = 0; l < d; ++l) {
        for (const TrigTerm& t : oc.a[static_cast<size_t>(j) * d + l]) {
          const int k1 = kp1 + t.q1, k2 = kp2 + t.q2;
          if (!box.contains(k1, k2)) continue;
          const int row = box.index(k1, k2);
          double kj, kl;
          if (adjoint) {
            kj = (j == 0 ? k1 : k2);
            kl = (l == 0 ? k1 : k2);
          } else {
            kj = kp[j];
            kl = kp[l];
          }
          // both directions carry (i k_j)(i k_l) / 2 = -k_j k_l / 2
          triplets.emplace_back(row, col, cplx(-0.5 * kj * kl, 0.0) * t.value);
        }
      }
  }

  SpMat mat(n, n);
  mat.setFromTriplets(triplets.begin(), triplets.end());
  return mat;
}

// Drop row `pinned_row` and put a 1 on its diagonal instead.
SpMat pin_row(const SpMat& mat, int pinned_row) {
  const int n = static_cast<int>(mat.rows());
  std::vector<Triplet> triplets;
  triplets.reserve(static_cast<size_t>(mat.nonZeros()) + 1);
  for (int k = 0; k < mat.outerSize(); ++k)
    for (SpMat::InnerIterator it(mat, k); it; ++it)
      if (it.row() != pinned_row) triplets.emplace_back(it.row(), it.col(), it.value());
  triplets.emplace_back(pinned_row, pinned_row, cplx(1.0, 0.0));
  SpMat out(n, n);
  out.setFromTriplets(triplets.begin(), triplets.end());
  return out;
}

// Smallest singular value via power iteration on B^{-H} B^{-1}.
double smallest_singular_value(const SpMat& mat) {
  Eigen::SparseLU<SpMat> lu(mat);
  if (lu.info() != Eigen::Success) return 0.0;
  SpMat adj = SpMat(mat.adjoint());
  Eigen::SparseLU<SpMat> lu_adj(adj);
  if (lu_adj.info() != Eigen::Success) return 0.0;

  const int n = static_cast<int>(mat.rows());
  Eigen::VectorXcd v(n);
  for (int i = 0; i < n; ++i) v(i) = cplx(std::cos(0.7 * i + 0.3), std::sin(1.3 * i + 0.1));
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 50; ++it) {
    Eigen::VectorXcd w = lu.solve(v);
    Eigen::VectorXcd u = lu_adj.solve(w);
    lambda = u.norm();
    if (lambda == 0.0) return 0.0;
    v = u / lambda;
  }
  return 1.0 / std::sqrt(lambda);
}

std::vector<cplx> coeffs_to_grid(const FreqBox& box, const std::vector<cplx>& coeffs, int grid_n,
                                 int deriv1 = -1, int deriv2 = -1) {
  // scatter box coefficients into the FFT layout, optionally multiplying by
  // (i k_{deriv1}) and (i k_{deriv2}) for spectral derivatives
  if (box.d == 1) {
    std::vector<cplx> slots(static_cast<size_t>(grid_n), cplx(0, 0));
    for (int k = -box.cutoff; k <= box.cutoff; ++k) {
      cplx c = coeffs[static_cast<size_t>(box.index(k))];
      if (deriv1 >= 0) c *= cplx(0.0, k);
      if (deriv2 >= 0) c *= cplx(0.0, k);
      const int j = k >= 0 ? k : k + grid_n;
      slots[static_cast<size_t>(j)] = c;
    }
    return fft_synthesize_1d(std::move(slots));
  }
  std::vector<cplx> slots(static_cast<size_t>(grid_n) * grid_n, cplx(0, 0));
  for (int k1 = -box.cutoff; k1 <= box.cutoff; ++k1)
    for (int k2 = -box.cutoff; k2 <= box.cutoff; ++k2) {
      cplx c = coeffs[static_cast<size_t>(box.index(k1, k2))];
      if (deriv1 >= 0) c *= cplx(0.0, deriv1 == 0 ? k1 : k2);
      if (deriv2 >= 0) c *= cplx(0.0, deriv2 == 0 ? k1 : k2);
      const int j1 = k1 >= 0 ? k1 : k1 + grid_n;
      const int j2 = k2 >= 0 ? k2 : k2 + grid_n;
      slots[static_cast<size_t>(j1) * grid_n + j2] = c;
    }
  return fft_synthesize_2d(std::move(slots), grid_n);
}

// signed frequency pair of a flattened FFT index
void grid_freq(int d, int grid_n, size_t flat, int& k1, int& k2) {
  if (d == 1) {
    const int j = static_cast<int>(flat);
    k1 = j < grid_n / 2 ? j : j - grid_n;
    k2 = 0;
    return;
  }
  const int jx = static_cast<int>(flat / static_cast<size_t>(grid_n));
  const int jy = static_cast<int>(flat % static_cast<size_t>(grid_n));
  k1 = jx < grid_n / 2 ? jx : jx - grid_n;
  k2 = jy < grid_n / 2 ? jy : jy - grid_n;
}

TorusPoint grid_point(int d, int grid_n, size_t flat) {
  TorusPoint x;
  if (d == 1) {
    x.c = SmallVec{kTwoPi * static_cast<double>(flat) / grid_n};
  } else {
    const size_t jx = flat / static_cast<size_t>(grid_n);
    const size_t jy = flat % static_cast<size_t>(grid_n);
    x.c = SmallVec{kTwoPi * static_cast<double>(jx) / grid_n,
                   kTwoPi * static_cast<double>(jy) / grid_n};
  }
  return x;
}

size_t grid_total(int d, int grid_n) {
  return d == 1 ? static_cast<size_t>(grid_n) : static_cast<size_t>(grid_n) * grid_n;
}

std::vector<cplx> grid_to_coeffs(int d, int grid_n, std::vector<cplx> samples) {
  return d == 1 ? fft_coefficients_1d(std::move(samples))
                : fft_coefficients_2d(std::move(samples), grid_n);
}

// enforce conj-symmetry (real reconstruction); solves leave ~1e-16 dust
void symmetrize_real(const FreqBox& box, std::vector<cplx>& coeffs) {
  if (box.d == 1) {
    for (int k = 1; k <= box.cutoff; ++k) {
      const cplx avg = 0.5 * (coeffs[static_cast<size_t>(box.index(k))] +
                              std::conj(coeffs[static_cast<size_t>(box.index(-k))]));
      coeffs[static_cast<size_t>(box.index(k))] = avg;
      coeffs[static_cast<size_t>(box.index(-k))] = std::conj(avg);
    }
    coeffs[static_cast<size_t>(box.index(0))] =
        cplx(coeffs[static_cast<size_t>(box.index(0))].real(), 0.0);
    return;
  }
  for (int k1 = -box.cutoff; k1 <= box.cutoff; ++k1)
    for (int k2 = -box.cutoff; k2 <= box.cutoff; ++k2) {
      if (k1 < 0 || (k1 == 0 && k2 < 0)) continue;
      const int i = box.index(k1, k2);
      const int j = box.index(-k1, -k2);
      if (i == j) {
        coeffs[static_cast<size_t>(i)] = cplx(coeffs[static_cast<size_t>(i)].real(), 0.0);
        continue;
      }
      const cplx avg =
          0.5 * (coeffs[static_cast<size_t>(i)] + std::conj(coeffs[static_cast<size_t>(j)]));
      coeffs[static_cast<size_t>(i)] = avg;
      coeffs[static_cast<size_t>(j)] = std::conj(avg);
    }
}

// sup over the grid of the untruncated adjoint generator applied to the
// reconstructed density: products with the exact coefficient fields are formed
// pointwise and differentiated spectrally.
double adjoint_residual_norm(const SdeProblem& problem, const SpectralDensity& density) {
  const int d = problem.d;
  const int grid_n = density.grid_n();
  const size_t total = grid_total(d, grid_n);

  const auto mu_vals = coeffs_to_grid(density.box, density.coeffs, grid_n);

  std::vector<cplx> resid_coeffs(total, cplx(0, 0));
  for (int j = 0; j < d; ++j) {
    std::vector<cplx> prod(total);
    for (size_t idx = 0; idx < total; ++idx) {
      const TorusPoint x = grid_point(d, grid_n, idx);
      prod[idx] = problem.drift(x)[j] * mu_vals[idx].real();
    }
    auto pc = grid_to_coeffs(d, grid_n, std::move(prod));
    for (size_t idx = 0; idx < total; ++idx) {
      int k1, k2;
      grid_freq(d, grid_n, idx, k1, k2);
      const double kj = (j == 0 ? k1 : k2);
      resid_coeffs[idx] += cplx(0.0, -kj) * pc[idx];
    }
  }
  for (int j = 0; j < d; ++j)
    for (int l = 0; l < d; ++l) {
      std::vector<cplx> prod(total);
      for (size_t idx = 0; idx < total; ++idx) {
        const TorusPoint x = grid_point(d, grid_n, idx);
        prod[idx] = problem.eval_covariance(x)(j, l) * mu_vals[idx].real();
      }
      auto pc = grid_to_coeffs(d, grid_n, std::move(prod));
      for (size_t idx = 0; idx < total; ++idx) {
        int k1, k2;
        grid_freq(d, grid_n, idx, k1, k2);
        const double kj = (j == 0 ? k1 : k2);
        const double kl = (l == 0 ? k1 : k2);
        resid_coeffs[idx] += cplx(-0.5 * kj * kl, 0.0) * pc[idx];
      }
    }

  auto resid_vals = d == 1 ? fft_synthesize_1d(std::move(resid_coeffs))
                           : fft_synthesize_2d(std::move(resid_coeffs), grid_n);
  double norm = 0.0;
  for (const auto& r : resid_vals) norm = std::max(norm, std::abs(r));
  return norm;
}

}  // namespace

double gibbs_average(const SdeProblem& problem, const Observable& observable, int n_quad) {
  if (n_quad < 256) throw std::invalid_argument("gibbs_average: n_quad >= 256 per axis");
  if (!problem.has_potential()) throw std::invalid_argument("not a gradient problem");

  // require g = sigma * I, constant
  const TorusPoint probe1 = TorusPoint::origin(problem.d);
  TorusPoint probe2;
  {
    SmallVec s(problem.d);
    for (int i = 0; i < problem.d; ++i) s[i] = 1.1 + 0.7 * i;
    probe2 = wrap(s);
  }
  const SmallMat g1 = problem.diffusion(probe1);
  const SmallMat g2 = problem.diffusion(probe2);
  if (g1.rows != problem.d || g1.cols != problem.d) throw std::invalid_argument("not a gradient problem");
  const double sigma = g1(0, 0);
  for (int i = 0; i < problem.d; ++i)
    for (int j = 0; j < problem.d; ++j) {
      const double want = (i == j) ? sigma : 0.0;
      if (std::abs(g1(i, j) - want) > 1e-14 || std::abs(g2(i, j) - want) > 1e-14)
        throw std::invalid_argument("not a gradient problem");
    }
  if (sigma <= 0.0) throw std::invalid_argument("not a gradient problem");

  const double beta = 2.0 / (sigma * sigma);
  KahanSum num, den;
  if (problem.d == 1) {
    for (int j = 0; j < n_quad; ++j) {
      TorusPoint x;
      x.c = SmallVec{kTwoPi * j / n_quad};
      const double w = std::exp(-beta * problem.potential(x));
      num.add(w * observable(x));
      den.add(w);
    }
  } else {
    for (int jx = 0; jx < n_quad; ++jx)
      for (int jy = 0; jy < n_quad; ++jy) {
        TorusPoint x;
        x.c = SmallVec{kTwoPi * jx / n_quad, kTwoPi * jy / n_quad};
        const double w = std::exp(-beta * problem.potential(x));
        num.add(w * observable(x));
        den.add(w);
      }
  }
  return num.value() / den.value();
}

SpectralDensity solve_stationary_density(const SdeProblem& problem, int cutoff) {
  if (problem.d > 2) throw std::invalid_argument("spectral solves support d in {1, 2}");
  if (cutoff <= 0) cutoff = default_cutoff(problem.d);

  SpectralDensity density;
  density.box = FreqBox{problem.d, cutoff};
  const int n = density.box.size();
  const int grid_n = density.grid_n();

  const OperatorCoeffs oc = analyze_problem(problem, grid_n);
  const SpMat adjoint = assemble_operator(problem, density.box, oc, /*adjoint=*/true);
  const int idx0 = density.box.index(0, 0);
  const double mass = std::pow(kTwoPi, -problem.d);

  Eigen::VectorXcd solution(n);
  if (problem.d == 1) {
    // dense: null-space extraction by SVD with an explicit normalization row
    Eigen::MatrixXcd dense = Eigen::MatrixXcd(adjoint);
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd_vals(dense);
    const auto& sv = svd_vals.singularValues();
    if (sv.size() < 2 || sv(sv.size() - 2) < 1e-6)
      throw std::runtime_error("no spectral gap at cutoff");

    Eigen::MatrixXcd stacked(n + 1, n);
    stacked.topRows(n) = dense;
    stacked.row(n).setZero();
    stacked(n, idx0) = cplx(1.0, 0.0);
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n + 1);
    rhs(n) = cplx(mass, 0.0);
    solution = stacked.bdcSvd(Eigen::ComputeThinU | Eigen::ComputeThinV).solve(rhs);
  } else {
    // sparse: the k = 0 row of the adjoint vanishes identically, so pinning it
    // to the normalization value yields a square system; a near-singular pin
    // signals an ill-resolved null space
    const SpMat pinned = pin_row(adjoint, idx0);
    if (smallest_singular_value(pinned) < 1e-6)
      throw std::runtime_error("no spectral gap at cutoff");
    Eigen::SparseLU<SpMat> lu(pinned);
    if (lu.info() != Eigen::Success) throw std::runtime_error("no spectral gap at cutoff");
    Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
    rhs(idx0) = cplx(mass, 0.0);
    solution = lu.solve(rhs);
  }

  density.coeffs.assign(static_cast<size_t>(n), cplx(0, 0));
  for (int i = 0; i < n; ++i) density.coeffs[static_cast<size_t>(i)] = solution(i);
  // pin the zero mode exactly and restore conjugate symmetry
  const cplx scale = cplx(mass, 0.0) / density.coeffs[static_cast<size_t>(idx0)];
  for (auto& c : density.coeffs) c *= scale;
  symmetrize_real(density.box, density.coeffs);
  density.coeffs[static_cast<size_t>(idx0)] = cplx(mass, 0.0);

  density.residual_norm = adjoint_residual_norm(problem, density);
  return density;
}

std::vector<double> density_grid_values(const SpectralDensity& density) {
  const auto vals = coeffs_to_grid(density.box, density.coeffs, density.grid_n());
  std::vector<double> out(vals.size());
  for (size_t i = 0; i < vals.size(); ++i) out[i] = vals[i].real();
  return out;
}

double stationary_average(const SpectralDensity& density, const Observable& observable) {
  const int d = density.box.d;
  const int grid_n = density.grid_n();
  const auto mu = density_grid_values(density);
  const size_t total = grid_total(d, grid_n);
  KahanSum acc;
  for (size_t idx = 0; idx < total; ++idx) {
    const TorusPoint x = grid_point(d, grid_n, idx);
    acc.add(observable(x) * mu[idx]);
  }
  return acc.value() / static_cast<double>(total) * std::pow(kTwoPi, d);
}

PoissonSolution solve_poisson(const SdeProblem& problem, const Observable& observable,
                              const SpectralDensity& density, std::optional<double> phi_bar) {
  const int d = problem.d;
  const FreqBox& box = density.box;
  const int n = box.size();
  const int grid_n = density.grid_n();
  const size_t total = grid_total(d, grid_n);

  const double phi_bar_spectral = stationary_average(density, observable);
  const double pb = phi_bar.value_or(phi_bar_spectral);
  // right-hand side must be orthogonal to the adjoint null space (the density)
  if (std::abs(phi_bar_spectral - pb) > 1e-8) throw std::runtime_error("singular system");

  // phi coefficients, truncated to the box
  std::vector<cplx> phi_samples(total);
  for (size_t idx = 0; idx < total; ++idx)
    phi_samples[idx] = observable(grid_point(d, grid_n, idx));
  const auto phi_coeffs_grid = grid_to_coeffs(d, grid_n, std::move(phi_samples));

  Eigen::VectorXcd rhs = Eigen::VectorXcd::Zero(n);
  for (size_t idx = 0; idx < total; ++idx) {
    int k1, k2;
    grid_freq(d, grid_n, idx, k1, k2);
    if (box.contains(k1, k2)) rhs(box.index(k1, k2)) = phi_coeffs_grid[idx];
  }
  const int idx0 = box.index(0, 0);
  rhs(idx0) -= cplx(pb, 0.0);

  const OperatorCoeffs oc = analyze_problem(problem, grid_n);
  const SpMat generator = assemble_operator(problem, box, oc, /*adjoint=*/false);

  // pin psi_hat(0) = 0 (solve on the complement of constants), gauge after
  SpMat pinned = pin_row(generator, idx0);
  rhs(idx0) = cplx(0.0, 0.0);
  Eigen::SparseLU<SpMat> lu(pinned);
  if (lu.info() != Eigen::Success) throw std::runtime_error("singular system");
  Eigen::VectorXcd solution = lu.solve(rhs);

  PoissonSolution psi;
  psi.box = box;
  psi.phi_bar = pb;
  psi.coeffs.assign(static_cast<size_t>(n), cplx(0, 0));
  for (int i = 0; i < n; ++i) psi.coeffs[static_cast<size_t>(i)] = solution(i);
  symmetrize_real(box, psi.coeffs);

  // gauge: int psi dmu = 0
  const auto mu = density_grid_values(density);
  {
    const auto psi_vals = coeffs_to_grid(box, psi.coeffs, grid_n);
    KahanSum acc;
    for (size_t idx = 0; idx < total; ++idx) acc.add(psi_vals[idx].real() * mu[idx]);
    const double integral = acc.value() / static_cast<double>(total) * std::pow(kTwoPi, d);
    psi.coeffs[static_cast<size_t>(idx0)] -= cplx(integral, 0.0);
  }
  {
    const auto psi_vals = coeffs_to_grid(box, psi.coeffs, grid_n);
    KahanSum acc;
    for (size_t idx = 0; idx < total; ++idx) acc.add(psi_vals[idx].real() * mu[idx]);
    psi.gauge = std::abs(acc.value() / static_cast<double>(total) * std::pow(kTwoPi, d));
  }

  // residual of the untruncated operator: f.grad psi + a:grad grad psi / 2
  // evaluated with exact coefficient fields and spectral derivatives
  {
    std::vector<std::vector<cplx>> grad(static_cast<size_t>(d));
    for (int j = 0; j < d; ++j) grad[static_cast<size_t>(j)] = coeffs_to_grid(box, psi.coeffs, grid_n, j);
    std::vector<std::vector<cplx>> hess(static_cast<size_t>(d) * d);
    for (int j = 0; j < d; ++j)
      for (int l = j; l < d; ++l)
        hess[static_cast<size_t>(j) * d + l] = coeffs_to_grid(box, psi.coeffs, grid_n, j, l);

    double norm = 0.0;
    for (size_t idx = 0; idx < total; ++idx) {
      const TorusPoint x = grid_point(d, grid_n, idx);
      const SmallVec f = problem.drift(x);
      const SmallMat a = problem.eval_covariance(x);
      double val = 0.0;
      for (int j = 0; j < d; ++j) val += f[j] * grad[static_cast<size_t>(j)][idx].real();
      for (int j = 0; j < d; ++j)
        for (int l = 0; l < d; ++l) {
          const auto& h = hess[static_cast<size_t>(std::min(j, l)) * d + std::max(j, l)];
          val += 0.5 * a(j, l) * h[idx].real();
        }
      const double target = observable(x) - pb;
      norm = std::max(norm, std::abs(val - target));
    }
    psi.residual_norm = norm;
  }

  return psi;
}

double asymptotic_variance(const SdeProblem& problem, const PoissonSolution& poisson,
                           const SpectralDensity& density) {
  const int d = problem.d;
  const FreqBox& box = poisson.box;
  const int grid_n = density.grid_n();
  const size_t total = grid_total(d, grid_n);

  std::vector<std::vector<cplx>> grad(static_cast<size_t>(d));
  for (int j = 0; j < d; ++j) grad[static_cast<size_t>(j)] = coeffs_to_grid(box, poisson.coeffs, grid_n, j);
  const auto mu = density_grid_values(density);

  KahanSum acc;
  for (size_t idx = 0; idx < total; ++idx) {
    const TorusPoint x = grid_point(d, grid_n, idx);
    const SmallMat g = problem.diffusion(x);
    double sq = 0.0;
    for (int k = 0; k < problem.m; ++k) {
      double comp = 0.0;
      for (int j = 0; j < d; ++j) comp += g(j, k) * grad[static_cast<size_t>(j)][idx].real();
      sq += comp * comp;
    }
    acc.add(sq * std::max(0.0, mu[idx]));  // clamp truncation dust in mu
  }
  return acc.value() / static_cast<double>(total) * std::pow(kTwoPi, d);
}

}  // namespace ergo
