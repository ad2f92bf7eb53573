#include "ergo/noise.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace ergo {

NoiseKind noise_kind_by_id(const std::string& id) {
  if (id == "gaussian") return NoiseKind::gaussian;
  if (id == "rademacher") return NoiseKind::rademacher;
  if (id == "three_point") return NoiseKind::three_point;
  throw std::invalid_argument("unknown noise kind: " + id);
}

std::string noise_id(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::gaussian: return "gaussian";
    case NoiseKind::rademacher: return "rademacher";
    case NoiseKind::three_point: return "three_point";
  }
  return "?";
}

double NoiseModel::exact_moment(int order) const {
  if (order < 0 || order > 16) throw std::invalid_argument("exact_moment: order in [0, 16]");
  if (order == 0) return 1.0;
  if (order % 2 == 1) return 0.0;
  const int j = order / 2;
  switch (kind) {
    case NoiseKind::gaussian: {
      // (2j - 1)!!
      double m = 1.0;
      for (int i = 3; i <= order; i += 2) m *= i;
      return m;
    }
    case NoiseKind::rademacher:
      return 1.0;
    case NoiseKind::three_point:
      // E eta^{2j} = 2 * (1/6) * 3^j = 3^{j-1}
      return std::pow(3.0, j - 1);
  }
  return 0.0;
}

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;
const double kSqrt3 = std::sqrt(3.0);

constexpr std::uint64_t kPhiloxM = 0xD2B74407B1CE6E93ULL;
constexpr std::uint64_t kPhiloxW = 0x9E3779B97F4A7C15ULL;

inline void philox_round(std::uint64_t& c0, std::uint64_t& c1, std::uint64_t& key) {
  const unsigned __int128 prod = static_cast<unsigned __int128>(kPhiloxM) * c0;
  const std::uint64_t hi = static_cast<std::uint64_t>(prod >> 64);
  const std::uint64_t lo = static_cast<std::uint64_t>(prod);
  c0 = hi ^ key ^ c1;
  c1 = lo;
  key += kPhiloxW;
}

inline double u64_to_unit(std::uint64_t r) {
  // [0, 1) with 53 random bits
  return static_cast<double>(r >> 11) * 0x1.0p-53;
}

inline double u64_to_unit_open0(std::uint64_t r) {
  // (0, 1]: safe for log()
  return (static_cast<double>(r >> 11) + 1.0) * 0x1.0p-53;
}

}  // namespace

void philox_block(const RngStream& s, std::uint64_t out[2]) {
  std::uint64_t c0 = s.counter;
  std::uint64_t c1 = s.stream_id;
  std::uint64_t key = s.master_seed;
  for (int r = 0; r < 10; ++r) philox_round(c0, c1, key);
  out[0] = c0;
  out[1] = c1;
}

double sample_scalar(const NoiseModel& model, RngStream& stream) {
  std::uint64_t r[2];
  philox_block(stream, r);
  ++stream.counter;
  switch (model.kind) {
    case NoiseKind::gaussian: {
      // Box-Muller, cosine branch; one normal per counter tick
      const double u1 = u64_to_unit_open0(r[0]);
      const double u2 = u64_to_unit(r[1]);
      return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTau * u2);
    }
    case NoiseKind::rademacher:
      return (r[0] >> 63) ? 1.0 : -1.0;
    case NoiseKind::three_point: {
      const double u = u64_to_unit(r[0]);
      if (u < 1.0 / 6.0) return -kSqrt3;
      if (u < 1.0 / 3.0) return kSqrt3;
      return 0.0;
    }
  }
  return 0.0;
}

SmallVec sample_increment(const NoiseModel& model, RngStream& stream, int m) {
  if (m < 1 || m > kMaxDim) throw std::invalid_argument("sample_increment: m out of range");
  SmallVec eta(m);
  for (int i = 0; i < m; ++i) eta[i] = sample_scalar(model, stream);
  return eta;
}

std::vector<MomentCheckRow> validate_moments(const NoiseModel& model, int max_order,
                                             long long n_samples, RngStream stream) {
  if (max_order < 1 || max_order > 8) throw std::invalid_argument("validate_moments: max_order in [1, 8]");
  if (n_samples < 10000) throw std::invalid_argument("validate_moments: need n_samples >= 1e4");

  std::vector<double> sums(static_cast<size_t>(max_order) + 1, 0.0);
  std::vector<double> comp(static_cast<size_t>(max_order) + 1, 0.0);
  for (long long i = 0; i < n_samples; ++i) {
    const double x = sample_scalar(model, stream);
    double p = 1.0;
    for (int k = 1; k <= max_order; ++k) {
      p *= x;
      // Kahan accumulation; moments up to order 8 of bounded/light-tailed laws
      const double y = p - comp[k];
      const double t = sums[k] + y;
      comp[k] = (t - sums[k]) - y;
      sums[k] = t;
    }
  }

  std::vector<MomentCheckRow> rows;
  rows.reserve(static_cast<size_t>(max_order));
  for (int k = 1; k <= max_order; ++k) {
    MomentCheckRow row;
    row.order = k;
    row.sample = sums[k] / static_cast<double>(n_samples);
    row.exact = model.exact_moment(k);
    const double var = model.exact_moment(2 * k) - row.exact * row.exact;
    if (var <= 0.0) {
      // degenerate moment (e.g. Rademacher even orders): must match exactly
      row.z = (row.sample == row.exact) ? 0.0 : std::numeric_limits<double>::infinity();
    } else {
      row.z = (row.sample - row.exact) / std::sqrt(var / static_cast<double>(n_samples));
    }
    row.pass = std::abs(row.z) <= 5.0;
    rows.push_back(row);
  }
  return rows;
}

}  // namespace ergo
