#pragma once

#include <span>
#include <vector>

#include "ergo/kahan.hpp"
#include "ergo/noise.hpp"
#include "ergo/observables.hpp"
#include "ergo/schemes.hpp"
#include "ergo/torus.hpp"

namespace ergo {

// Arithmetic mean over indices 0..N-1 (phi(X_0) included, phi(X_N) not).
double time_average(std::span<const double> values);

struct BlockStats {
  double sampled_variance = 0.0;  // unbiased sample variance of the block means
  double ci_halfwidth = 0.0;      // c * sqrt(variance / M)
};

BlockStats block_statistics(std::span<const double> block_means, double c_multiplier);

// Two-grid extrapolation: (2^p * fine - coarse) / (2^p - 1), fine at delta/2.
double richardson(double value_coarse, double value_fine, int p);

struct EstimatorResult {
  double value = 0.0;   // time average (or extrapolated value downstream)
  double delta = 0.0;
  long long n_steps = 0;
  double horizon = 0.0;  // n_steps * delta
  std::vector<double> block_means;
  double sampled_variance = 0.0;
  double ci_halfwidth = 0.0;
  double c_multiplier = 2.0;
};

// One trajectory of n_steps steps in a single pass; block means over M
// contiguous blocks of length n_steps / n_blocks. burnin extra steps are taken
// (and discarded) before accumulation starts.
EstimatorResult run_time_average(const SdeProblem& problem, const SchemeConfig& scheme,
                                 const NoiseModel& noise, const Observable& observable,
                                 const TorusPoint& x0, double delta, long long n_steps,
                                 int n_blocks, RngStream stream, long long burnin = 0,
                                 double c_multiplier = 2.0);

// Same trajectory, several observables accumulated at once (the distance
// dictionary shares one pass).
std::vector<EstimatorResult> run_multi_average(const SdeProblem& problem,
                                               const SchemeConfig& scheme,
                                               const NoiseModel& noise,
                                               const std::vector<Observable>& observables,
                                               const TorusPoint& x0, double delta,
                                               long long n_steps, int n_blocks, RngStream stream,
                                               long long burnin = 0, double c_multiplier = 2.0);

struct EnsembleResult {
  double mean = 0.0;
  double std_error = 0.0;  // sample std of phi(X_T) across trajectories / sqrt(L)
  long long n_trajectories = 0;
};

// L independent trajectories to time t_final (distinct stream ids); mean of
// phi at the final state.
EnsembleResult ensemble_average(const SdeProblem& problem, const SchemeConfig& scheme,
                                const NoiseModel& noise, const Observable& observable,
                                double t_final, double delta, long long n_trajectories,
                                const TorusPoint& x0, RngStream base_stream, int threads = 1);

}  // namespace ergo
