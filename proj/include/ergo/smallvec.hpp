#pragma once

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>

namespace ergo {

// State dimensions on the torus are tiny (catalog: d, m <= 2). Fixed-capacity
// vectors keep the per-step hot path free of heap traffic.
inline constexpr int kMaxDim = 4;

struct SmallVec {
  int n = 0;
  std::array<double, kMaxDim> v{};

  SmallVec() = default;
  explicit SmallVec(int size) : n(size) { assert(size >= 0 && size <= kMaxDim); }
  SmallVec(std::initializer_list<double> xs) : n(static_cast<int>(xs.size())) {
    assert(n <= kMaxDim);
    std::copy(xs.begin(), xs.end(), v.begin());
  }

  static SmallVec zeros(int size) { return SmallVec(size); }

  double& operator[](int i) { return v[static_cast<size_t>(i)]; }
  double operator[](int i) const { return v[static_cast<size_t>(i)]; }
  int size() const { return n; }

  SmallVec& operator+=(const SmallVec& o) {
    for (int i = 0; i < n; ++i) v[i] += o.v[i];
    return *this;
  }
  SmallVec& operator-=(const SmallVec& o) {
    for (int i = 0; i < n; ++i) v[i] -= o.v[i];
    return *this;
  }
  SmallVec& operator*=(double s) {
    for (int i = 0; i < n; ++i) v[i] *= s;
    return *this;
  }

  friend SmallVec operator+(SmallVec a, const SmallVec& b) { return a += b; }
  friend SmallVec operator-(SmallVec a, const SmallVec& b) { return a -= b; }
  friend SmallVec operator*(double s, SmallVec a) { return a *= s; }
  friend SmallVec operator*(SmallVec a, double s) { return a *= s; }

  double dot(const SmallVec& o) const {
    double r = 0;
    for (int i = 0; i < n; ++i) r += v[i] * o.v[i];
    return r;
  }
  double norm_inf() const {
    double r = 0;
    for (int i = 0; i < n; ++i) r = std::max(r, std::abs(v[i]));
    return r;
  }
  double norm2() const { return std::sqrt(dot(*this)); }
  bool all_finite() const {
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(v[i])) return false;
    return true;
  }
};

// Row-major rows x cols matrix, capacity kMaxDim x kMaxDim.
struct SmallMat {
  int rows = 0, cols = 0;
  std::array<double, kMaxDim * kMaxDim> a{};

  SmallMat() = default;
  SmallMat(int r, int c) : rows(r), cols(c) {
    assert(r >= 0 && r <= kMaxDim && c >= 0 && c <= kMaxDim);
  }

  static SmallMat identity(int d) {
    SmallMat m(d, d);
    for (int i = 0; i < d; ++i) m(i, i) = 1.0;
    return m;
  }
  static SmallMat zeros(int r, int c) { return SmallMat(r, c); }

  double& operator()(int i, int j) { return a[static_cast<size_t>(i * kMaxDim + j)]; }
  double operator()(int i, int j) const { return a[static_cast<size_t>(i * kMaxDim + j)]; }

  SmallVec col(int j) const {
    SmallVec c(rows);
    for (int i = 0; i < rows; ++i) c[i] = (*this)(i, j);
    return c;
  }

  // y = M x
  SmallVec apply(const SmallVec& x) const {
    assert(x.n == cols);
    SmallVec y(rows);
    for (int i = 0; i < rows; ++i) {
      double s = 0;
      for (int j = 0; j < cols; ++j) s += (*this)(i, j) * x[j];
      y[i] = s;
    }
    return y;
  }

  // A = M M^T
  SmallMat gram() const {
    SmallMat g(rows, rows);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < rows; ++j) {
        double s = 0;
        for (int k = 0; k < cols; ++k) s += (*this)(i, k) * (*this)(j, k);
        g(i, j) = s;
      }
    return g;
  }

  double max_abs() const {
    double r = 0;
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) r = std::max(r, std::abs((*this)(i, j)));
    return r;
  }

  friend SmallMat operator-(SmallMat m, const SmallMat& o) {
    for (int i = 0; i < m.rows; ++i)
      for (int j = 0; j < m.cols; ++j) m(i, j) -= o(i, j);
    return m;
  }
};

}  // namespace ergo
