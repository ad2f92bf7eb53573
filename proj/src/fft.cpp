#include "ergo/fft.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace ergo {

void fft_pow2(cplx* data, int n, int sign) {
  if (n <= 0 || (n & (n - 1)) != 0) throw std::invalid_argument("fft_pow2: n must be a power of two");

  // bit-reversal permutation
  for (int i = 1, j = 0; i < n; ++i) {
    int bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  for (int len = 2; len <= n; len <<= 1) {
    const double ang = sign * 2.0 * std::numbers::pi / len;
    const cplx wl(std::cos(ang), std::sin(ang));
    for (int i = 0; i < n; i += len) {
      cplx w(1.0, 0.0);
      for (int k = 0; k < len / 2; ++k) {
        const cplx u = data[i + k];
        const cplx v = data[i + k + len / 2] * w;
        data[i + k] = u + v;
        data[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
}

std::vector<cplx> fft_coefficients_1d(std::vector<cplx> samples) {
  const int n = static_cast<int>(samples.size());
  fft_pow2(samples.data(), n, -1);
  for (auto& c : samples) c /= static_cast<double>(n);
  return samples;
}

std::vector<cplx> fft_synthesize_1d(std::vector<cplx> coeffs) {
  const int n = static_cast<int>(coeffs.size());
  fft_pow2(coeffs.data(), n, +1);
  return coeffs;
}

namespace {

void fft_2d(std::vector<cplx>& data, int n, int sign) {
  // rows
  for (int ix = 0; ix < n; ++ix) fft_pow2(data.data() + static_cast<size_t>(ix) * n, n, sign);
  // columns
  std::vector<cplx> col(static_cast<size_t>(n));
  for (int iy = 0; iy < n; ++iy) {
    for (int ix = 0; ix < n; ++ix) col[static_cast<size_t>(ix)] = data[static_cast<size_t>(ix) * n + iy];
    fft_pow2(col.data(), n, sign);
    for (int ix = 0; ix < n; ++ix) data[static_cast<size_t>(ix) * n + iy] = col[static_cast<size_t>(ix)];
  }
}

}  // namespace

std::vector<cplx> fft_coefficients_2d(std::vector<cplx> samples, int n) {
  if (static_cast<int>(samples.size()) != n * n)
    throw std::invalid_argument("fft_coefficients_2d: size mismatch");
  fft_2d(samples, n, -1);
  const double norm = static_cast<double>(n) * n;
  for (auto& c : samples) c /= norm;
  return samples;
}

std::vector<cplx> fft_synthesize_2d(std::vector<cplx> coeffs, int n) {
  if (static_cast<int>(coeffs.size()) != n * n)
    throw std::invalid_argument("fft_synthesize_2d: size mismatch");
  fft_2d(coeffs, n, +1);
  return coeffs;
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

}  // namespace ergo
