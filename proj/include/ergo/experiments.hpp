#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ergo/estimators.hpp"
#include "ergo/oracle.hpp"
#include "ergo/ratefit.hpp"

namespace ergo {

// One experiment description; doubles as the JSON config schema (snake_case
// field names, unknown keys rejected).
struct SweepConfig {
  std::string problem_id = "grad1d";
  std::string scheme_id = "explicit_em";
  std::string noise = "gaussian";
  std::vector<std::string> observables = {"cos_1"};
  std::vector<double> delta_grid;   // strictly decreasing, ratio 2
  double horizon = 2e4;             // T per grid point (delta sweeps, distance)
  std::vector<double> t_grid;       // horizons for sweep_time
  double fixed_delta = 0.01;        // sweep_time step
  int repeats = 64;
  int n_blocks = 32;
  std::uint64_t seed = 0;
  long long burnin = 0;
  int threads = 1;
  int cutoff = 0;                   // oracle cutoff (0 = default)
  std::string out_dir;
};

SweepConfig config_from_json_text(const std::string& text);
SweepConfig config_from_json_file(const std::string& path);

struct RatePoint {
  double param = 0.0;         // delta or T
  double error = 0.0;
  double error_stderr = 0.0;
  double value = 0.0;         // mean estimate across repeats
  double oracle_value = 0.0;
  double ci_halfwidth = 0.0;  // 2 * error_stderr of the reported value
  int repeats = 0;
  bool used_in_fit = false;
};

struct RateReport {
  std::vector<RatePoint> grid;
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  double reference_value = 0.0;  // oracle phi_bar
  std::vector<std::string> warnings;
};

// Bias sweep: |mean of M_rep independent phi_hat - oracle phi_bar| per delta,
// log-log slope fitted with noise-dominated points excluded.
RateReport sweep_delta(const SweepConfig& cfg);

// MSE vs horizon at fixed delta; slope of log MSE vs log T (expected -1).
RateReport sweep_time(const SweepConfig& cfg);

struct ExtrapolationReport {
  RateReport extrapolated;  // errors of the (delta, delta/2) Richardson pairs
  RateReport raw;           // errors of the plain coarse estimates
};

ExtrapolationReport extrapolate_sweep(const SweepConfig& cfg);

struct DistanceEntry {
  std::string label;
  double error = 0.0;          // |phi_hat - phi_bar| / |phi|_H
  double ci_halfwidth = 0.0;   // normalized the same way
  double h_norm = 1.0;
};

struct DistancePoint {
  double delta = 0.0;
  double max_error = 0.0;      // finite-dictionary lower proxy for rho
  double max_error_se = 0.0;
  std::vector<DistanceEntry> entries;
};

struct DistanceReport {
  std::vector<DistancePoint> points;
  double slope = 0.0;
  double r2 = 0.0;
  std::vector<std::string> warnings;
};

// Per-delta max normalized error over a fixed trigonometric dictionary; the
// dictionary is cfg.observables, or the default 8-member one when empty.
// p sets the W^{2p,inf} normalization of the members.
DistanceReport distance_report(const SweepConfig& cfg, int p);

// gibbs quadrature when the problem qualifies, spectral solve otherwise
double oracle_phi_bar(const SdeProblem& problem, const Observable& observable, int cutoff = 0);

// Deterministic per-repeat stream id (FNV-1a over the run coordinates), so
// results do not depend on scheduling.
std::uint64_t repeat_stream_id(const std::string& problem_id, const std::string& scheme_id,
                               double delta, long long repeat);

// Emission: tidy CSV (one row per grid point), report JSON, minimal SVG chart.
std::string sweep_csv(const RateReport& report);
std::string report_json(const RateReport& report);
std::string distance_csv(const DistanceReport& report);
std::string distance_json(const DistanceReport& report);
std::string loglog_svg(const RateReport& report, const std::string& title);
void write_text_file(const std::string& path, const std::string& content);

std::string format_double(double v);  // shortest exact round-trip formatting

}  // namespace ergo
