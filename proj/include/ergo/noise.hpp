#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergo/smallvec.hpp"

namespace ergo {

// Scheme increment laws. All satisfy E eta = E eta^3 = 0, E eta^2 = 1 and have
// every moment finite. three_point is P(+-sqrt3) = 1/6, P(0) = 2/3; it matches
// the Gaussian moments through order 5 and drives the weak-2 scheme.
enum class NoiseKind { gaussian, rademacher, three_point };

NoiseKind noise_kind_by_id(const std::string& id);
std::string noise_id(NoiseKind kind);

struct NoiseModel {
  NoiseKind kind = NoiseKind::gaussian;

  // E[eta^order], exact, for order in [0, 16].
  double exact_moment(int order) const;
};

// Counter-based stream: every draw is a pure function of
// (master_seed, stream_id, counter), so trajectory j / step n consumes the
// same randomness regardless of thread count or scheduling. Distinct
// stream_ids give statistically independent sequences (Philox2x64-10 blocks).
struct RngStream {
  std::uint64_t master_seed = 0;
  std::uint64_t stream_id = 0;
  std::uint64_t counter = 0;
};

// Raw 128-bit Philox2x64-10 block for (counter, stream_id) under master_seed.
void philox_block(const RngStream& s, std::uint64_t out[2]);

// One scalar draw; consumes exactly one counter tick.
double sample_scalar(const NoiseModel& model, RngStream& stream);

// m i.i.d. scalar draws (the per-step increment vector eta or xi).
SmallVec sample_increment(const NoiseModel& model, RngStream& stream, int m);

struct MomentCheckRow {
  int order = 0;
  double sample = 0.0;
  double exact = 0.0;
  double z = 0.0;       // (sample - exact) / standard error
  bool pass = true;     // |z| <= 5
};

// Sample-moment audit against the exact table; n_samples >= 1e4 required.
std::vector<MomentCheckRow> validate_moments(const NoiseModel& model, int max_order,
                                             long long n_samples, RngStream stream);

}  // namespace ergo
