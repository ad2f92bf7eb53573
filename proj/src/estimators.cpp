#include "ergo/estimators.hpp"

#include <cmath>
#include <stdexcept>

#include "ergo/parallel.hpp"

namespace ergo {

double time_average(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("time_average: empty list");
  KahanSum acc;
  for (double v : values) acc.add(v);
  return acc.value() / static_cast<double>(values.size());
}

BlockStats block_statistics(std::span<const double> block_means, double c_multiplier) {
  const size_t m = block_means.size();
  if (m < 2) throw std::invalid_argument("need >= 2 blocks");

  KahanSum sum;
  for (double b : block_means) sum.add(b);
  const double mean = sum.value() / static_cast<double>(m);

  KahanSum ss;
  for (double b : block_means) ss.add((b - mean) * (b - mean));
  BlockStats stats;
  stats.sampled_variance = ss.value() / static_cast<double>(m - 1);
  stats.ci_halfwidth = c_multiplier * std::sqrt(stats.sampled_variance / static_cast<double>(m));
  return stats;
}

double richardson(double value_coarse, double value_fine, int p) {
  if (p < 1) throw std::invalid_argument("richardson: p >= 1");
  const double w = std::pow(2.0, p);
  return (w * value_fine - value_coarse) / (w - 1.0);
}

std::vector<EstimatorResult> run_multi_average(const SdeProblem& problem,
                                               const SchemeConfig& scheme,
                                               const NoiseModel& noise,
                                               const std::vector<Observable>& observables,
                                               const TorusPoint& x0, double delta,
                                               long long n_steps, int n_blocks, RngStream stream,
                                               long long burnin, double c_multiplier) {
  if (observables.empty()) throw std::invalid_argument("run_multi_average: no observables");
  if (n_steps <= 0) throw std::invalid_argument("run_multi_average: n_steps must be positive");
  if (n_blocks < 1 || n_steps % n_blocks != 0)
    throw std::invalid_argument("run_multi_average: n_steps must be divisible by n_blocks");
  check_scheme_admissible(problem, scheme, delta);

  const size_t n_obs = observables.size();
  const long long block_len = n_steps / n_blocks;

  TorusPoint x = x0;
  for (long long i = 0; i < burnin; ++i) {
    const SmallVec eta = sample_increment(noise, stream, problem.m);
    x = scheme_step(problem, scheme, x, delta, eta);
  }

  std::vector<KahanSum> global(n_obs), block(n_obs);
  std::vector<std::vector<double>> block_means(n_obs);
  for (auto& bm : block_means) bm.reserve(static_cast<size_t>(n_blocks));

  for (long long n = 0; n < n_steps; ++n) {
    for (size_t j = 0; j < n_obs; ++j) {
      const double v = observables[j](x);
      global[j].add(v);
      block[j].add(v);
    }
    if ((n + 1) % block_len == 0) {
      for (size_t j = 0; j < n_obs; ++j) {
        block_means[j].push_back(block[j].value() / static_cast<double>(block_len));
        block[j] = KahanSum{};
      }
    }
    const SmallVec eta = sample_increment(noise, stream, problem.m);
    x = scheme_step(problem, scheme, x, delta, eta);
  }

  std::vector<EstimatorResult> results(n_obs);
  for (size_t j = 0; j < n_obs; ++j) {
    EstimatorResult& r = results[j];
    r.value = global[j].value() / static_cast<double>(n_steps);
    r.delta = delta;
    r.n_steps = n_steps;
    r.horizon = static_cast<double>(n_steps) * delta;
    r.block_means = std::move(block_means[j]);
    r.c_multiplier = c_multiplier;
    if (n_blocks >= 2) {
      const BlockStats stats = block_statistics(r.block_means, c_multiplier);
      r.sampled_variance = stats.sampled_variance;
      r.ci_halfwidth = stats.ci_halfwidth;
    }
  }
  return results;
}

EstimatorResult run_time_average(const SdeProblem& problem, const SchemeConfig& scheme,
                                 const NoiseModel& noise, const Observable& observable,
                                 const TorusPoint& x0, double delta, long long n_steps,
                                 int n_blocks, RngStream stream, long long burnin,
                                 double c_multiplier) {
  return run_multi_average(problem, scheme, noise, {observable}, x0, delta, n_steps, n_blocks,
                           stream, burnin, c_multiplier)[0];
}

EnsembleResult ensemble_average(const SdeProblem& problem, const SchemeConfig& scheme,
                                const NoiseModel& noise, const Observable& observable,
                                double t_final, double delta, long long n_trajectories,
                                const TorusPoint& x0, RngStream base_stream, int threads) {
  if (n_trajectories < 2) throw std::invalid_argument("ensemble_average: need >= 2 trajectories");
  check_scheme_admissible(problem, scheme, delta);
  const double steps_real = t_final / delta;
  const long long n_steps = std::llround(steps_real);
  if (std::abs(steps_real - static_cast<double>(n_steps)) > 1e-9)
    throw std::invalid_argument("ensemble_average: t_final must be an integer multiple of delta");

  std::vector<double> finals(static_cast<size_t>(n_trajectories));
  par_for(n_trajectories, threads, [&](long long l) {
    RngStream stream{base_stream.master_seed, base_stream.stream_id + static_cast<std::uint64_t>(l), 0};
    TorusPoint x = x0;
    for (long long n = 0; n < n_steps; ++n) {
      const SmallVec eta = sample_increment(noise, stream, problem.m);
      x = scheme_step(problem, scheme, x, delta, eta);
    }
    finals[static_cast<size_t>(l)] = observable(x);
  });

  KahanSum sum;
  for (double v : finals) sum.add(v);
  EnsembleResult res;
  res.n_trajectories = n_trajectories;
  res.mean = sum.value() / static_cast<double>(n_trajectories);
  if (n_trajectories >= 2) {
    KahanSum ss;
    for (double v : finals) ss.add((v - res.mean) * (v - res.mean));
    const double var = ss.value() / static_cast<double>(n_trajectories - 1);
    res.std_error = std::sqrt(var / static_cast<double>(n_trajectories));
  }
  return res;
}

}  // namespace ergo
