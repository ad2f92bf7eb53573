#pragma once

#include <complex>
#include <vector>

namespace ergo {

using cplx = std::complex<double>;

// In-place radix-2 Cooley-Tukey. n must be a power of two (grid sizes here
// always are). sign = -1: forward (analysis, unnormalized); sign = +1:
// inverse (synthesis, unnormalized; divide by n for the true inverse).
void fft_pow2(cplx* data, int n, int sign);

// Forward transform of samples on the uniform grid x_j = 2*pi*j/n, returning
// Fourier coefficients c_k = (1/n) sum_j f(x_j) e^{-i k x_j}; c_k approximates
// the coefficient of e^{i k x} and is exact when f is band-limited below the
// Nyquist frequency. Output index j holds frequency k = j for j < n/2 and
// k = j - n for j >= n/2.
std::vector<cplx> fft_coefficients_1d(std::vector<cplx> samples);

// Row-column 2d version on an n x n grid (row-major, index = ix * n + iy).
std::vector<cplx> fft_coefficients_2d(std::vector<cplx> samples, int n);

// Inverse of the above: synthesize grid samples from coefficient arrays.
std::vector<cplx> fft_synthesize_1d(std::vector<cplx> coeffs);
std::vector<cplx> fft_synthesize_2d(std::vector<cplx> coeffs, int n);

int next_pow2(int n);

}  // namespace ergo
