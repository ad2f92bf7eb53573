// Command-line harness: stationary oracles, single simulations, weak-order
// certificates, and convergence sweeps. Exit codes: 0 success, 2 bad
// config/precondition, 3 threshold failure (for CI gating).

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "ergo/experiments.hpp"
#include "ergo/parallel.hpp"

namespace {

using nlohmann::json;

struct GlobalOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int threads = 0;  // 0 = hardware
  bool seed_set = false, threads_set = false, out_set = false;
};

ergo::SweepConfig load_config(const GlobalOpts& g) {
  ergo::SweepConfig cfg;
  if (!g.config_path.empty()) cfg = ergo::config_from_json_file(g.config_path);
  if (g.seed_set || g.config_path.empty()) cfg.seed = g.seed;
  if (g.threads_set || cfg.threads <= 0)
    cfg.threads = g.threads > 0 ? g.threads : ergo::hardware_threads();
  if (g.out_set || cfg.out_dir.empty()) cfg.out_dir = g.out_dir;
  return cfg;
}

void emit_report_files(const ergo::SweepConfig& cfg, const std::string& stem,
                       const ergo::RateReport& report, const std::string& title) {
  namespace fs = std::filesystem;
  fs::create_directories(cfg.out_dir);
  const std::string base = (fs::path(cfg.out_dir) / stem).string();
  ergo::write_text_file(base + ".csv", ergo::sweep_csv(report));
  ergo::write_text_file(base + ".json", ergo::report_json(report));
  ergo::write_text_file(base + ".svg", ergo::loglog_svg(report, title));
}

int check_slope_window(const ergo::RateReport& report, std::optional<double> lo,
                       std::optional<double> hi) {
  if (lo && report.slope < *lo) return 3;
  if (hi && report.slope > *hi) return 3;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stationary averages of torus SDEs: oracles, estimators, and rate experiments"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand

  GlobalOpts g;
  app.add_option("--config", g.config_path, "JSON config file (SweepConfig schema)");
  auto* seed_opt = app.add_option("--seed", g.seed, "master seed");
  auto* threads_opt = app.add_option("--threads", g.threads, "worker threads");
  auto* out_opt = app.add_option("--out", g.out_dir, "output directory");

  // oracle
  auto* cmd_oracle = app.add_subcommand("oracle", "spectral stationary oracle for one observable");
  std::string problem_id = "grad1d", observable_id = "cos_1", scheme_id = "explicit_em";
  std::string noise_id = "gaussian";
  int cutoff = 0;
  cmd_oracle->add_option("--problem", problem_id)->required();
  cmd_oracle->add_option("--observable", observable_id)->required();
  cmd_oracle->add_option("--cutoff", cutoff);

  // simulate
  auto* cmd_sim = app.add_subcommand("simulate", "one time-averaging trajectory, CSV row out");
  double sim_delta = 0.01;
  long long sim_steps = 100000, sim_burnin = 0;
  int sim_blocks = 32;
  cmd_sim->add_option("--problem", problem_id)->required();
  cmd_sim->add_option("--scheme", scheme_id)->required();
  cmd_sim->add_option("--observable", observable_id)->required();
  cmd_sim->add_option("--delta", sim_delta)->required();
  cmd_sim->add_option("--steps", sim_steps)->required();
  cmd_sim->add_option("--blocks", sim_blocks);
  cmd_sim->add_option("--burnin", sim_burnin);
  cmd_sim->add_option("--noise", noise_id);

  // check-order
  auto* cmd_order = app.add_subcommand("check-order", "Monte-Carlo weak-order certificate");
  int order_p = 1, order_substeps = 512;
  long long order_samples = 1000000;
  std::vector<double> order_deltas;
  cmd_order->add_option("--scheme", scheme_id)->required();
  cmd_order->add_option("--problem", problem_id)->required();
  cmd_order->add_option("--p", order_p)->required();
  cmd_order->add_option("--deltas", order_deltas)->required()->delimiter(',');
  cmd_order->add_option("--samples", order_samples);
  cmd_order->add_option("--substeps", order_substeps);
  auto* order_noise = cmd_order->add_option("--noise", noise_id);

  // sweeps
  std::optional<double> expect_min, expect_max;
  auto add_sweep_opts = [&](CLI::App* cmd) {
    cmd->add_option("--problem", problem_id);
    cmd->add_option("--scheme", scheme_id);
    cmd->add_option("--noise", noise_id);
    cmd->add_option("--observable", observable_id);
    cmd->add_option_function<double>("--expect-slope-min",
                                     [&](double v) { expect_min = v; });
    cmd->add_option_function<double>("--expect-slope-max",
                                     [&](double v) { expect_max = v; });
  };

  auto* cmd_sweep_delta = app.add_subcommand("sweep-delta", "bias vs delta rate fit");
  std::vector<double> deltas_flag, times_flag;
  double horizon_flag = 0.0, fixed_delta_flag = 0.0;
  int repeats_flag = 0, blocks_flag = 0;
  add_sweep_opts(cmd_sweep_delta);
  auto* sd_deltas = cmd_sweep_delta->add_option("--deltas", deltas_flag)->delimiter(',');
  auto* sd_horizon = cmd_sweep_delta->add_option("--horizon", horizon_flag);
  auto* sd_repeats = cmd_sweep_delta->add_option("--repeats", repeats_flag);
  auto* sd_blocks = cmd_sweep_delta->add_option("--blocks", blocks_flag);

  auto* cmd_sweep_time = app.add_subcommand("sweep-time", "MSE vs horizon rate fit");
  add_sweep_opts(cmd_sweep_time);
  auto* st_times = cmd_sweep_time->add_option("--times", times_flag)->delimiter(',');
  auto* st_delta = cmd_sweep_time->add_option("--delta", fixed_delta_flag);
  auto* st_repeats = cmd_sweep_time->add_option("--repeats", repeats_flag);
  auto* st_blocks = cmd_sweep_time->add_option("--blocks", blocks_flag);

  auto* cmd_extrap = app.add_subcommand("extrapolate", "Richardson-extrapolated bias sweep");
  add_sweep_opts(cmd_extrap);
  auto* ex_deltas = cmd_extrap->add_option("--deltas", deltas_flag)->delimiter(',');
  auto* ex_horizon = cmd_extrap->add_option("--horizon", horizon_flag);
  auto* ex_repeats = cmd_extrap->add_option("--repeats", repeats_flag);
  auto* ex_blocks = cmd_extrap->add_option("--blocks", blocks_flag);

  auto* cmd_dist = app.add_subcommand("distance", "stationary-distance proxy over a dictionary");
  std::vector<std::string> dict_flag;
  int dist_p = 1;
  add_sweep_opts(cmd_dist);
  auto* di_deltas = cmd_dist->add_option("--deltas", deltas_flag)->delimiter(',');
  auto* di_horizon = cmd_dist->add_option("--horizon", horizon_flag);
  auto* di_dict = cmd_dist->add_option("--dict", dict_flag)->delimiter(',');
  cmd_dist->add_option("--p", dist_p);
  auto* di_blocks = cmd_dist->add_option("--blocks", blocks_flag);

  CLI11_PARSE(app, argc, argv);
  g.seed_set = seed_opt->count() > 0;
  g.threads_set = threads_opt->count() > 0;
  g.out_set = out_opt->count() > 0;

  try {
    if (cmd_oracle->parsed()) {
      const ergo::SdeProblem problem = ergo::problem_by_id(problem_id);
      const ergo::Observable obs = ergo::observable_by_id(observable_id, problem.d);
      const ergo::SpectralDensity density = ergo::solve_stationary_density(problem, cutoff);
      const ergo::PoissonSolution psi = ergo::solve_poisson(problem, obs, density);
      const double avar = ergo::asymptotic_variance(problem, psi, density);
      json out;
      out["phi_bar"] = psi.phi_bar;
      out["residual"] = psi.residual_norm;
      out["asymptotic_variance"] = avar;
      std::cout << out.dump(2) << "\n";
      return 0;
    }

    if (cmd_sim->parsed()) {
      const ergo::SweepConfig base = load_config(g);
      const ergo::SdeProblem problem = ergo::problem_by_id(problem_id);
      const ergo::SchemeConfig scheme = ergo::SchemeConfig::by_id(scheme_id);
      const ergo::NoiseModel noise{ergo::noise_kind_by_id(noise_id)};
      const ergo::Observable obs = ergo::observable_by_id(observable_id, problem.d);
      ergo::RngStream stream{base.seed, 0, 0};
      const ergo::EstimatorResult res = ergo::run_time_average(
          problem, scheme, noise, obs, ergo::TorusPoint::origin(problem.d), sim_delta, sim_steps,
          sim_blocks, stream, sim_burnin);
      std::cout << "problem,scheme,observable,delta,steps,horizon,value,variance,ci_halfwidth,seed\n";
      std::cout << problem_id << "," << scheme_id << "," << observable_id << ","
                << ergo::format_double(res.delta) << "," << res.n_steps << ","
                << ergo::format_double(res.horizon) << "," << ergo::format_double(res.value) << ","
                << ergo::format_double(res.sampled_variance) << ","
                << ergo::format_double(res.ci_halfwidth) << "," << base.seed << "\n";
      return 0;
    }

    if (cmd_order->parsed()) {
      const ergo::SweepConfig base = load_config(g);
      const ergo::SdeProblem problem = ergo::problem_by_id(problem_id);
      const ergo::SchemeConfig scheme = ergo::SchemeConfig::by_id(scheme_id);
      const ergo::NoiseModel noise = order_noise->count() > 0
                                         ? ergo::NoiseModel{ergo::noise_kind_by_id(noise_id)}
                                         : ergo::default_noise_for(scheme.kind);
      ergo::RngStream stream{base.seed, 1, 0};
      const ergo::OrderCheckReport report =
          ergo::weak_order_check(scheme, problem, order_deltas, order_p, order_samples, stream,
                                 noise, order_substeps, base.threads);
      json out;
      out["scheme"] = report.scheme;
      out["p_claimed"] = report.p_claimed;
      out["slope"] = report.defect_slope;
      out["pass"] = report.pass;
      std::cout << out.dump(2) << "\n";
      return report.pass ? 0 : 3;
    }

    ergo::SweepConfig cfg = load_config(g);
    if (cmd_sweep_delta->parsed() || cmd_extrap->parsed() || cmd_dist->parsed() ||
        cmd_sweep_time->parsed()) {
      CLI::App* active = cmd_sweep_delta->parsed()   ? cmd_sweep_delta
                         : cmd_sweep_time->parsed()  ? cmd_sweep_time
                         : cmd_extrap->parsed()      ? cmd_extrap
                                                     : cmd_dist;
      if (active->count("--problem")) cfg.problem_id = problem_id;
      if (active->count("--scheme")) cfg.scheme_id = scheme_id;
      if (active->count("--noise")) cfg.noise = noise_id;
      if (active->count("--observable")) cfg.observables = {observable_id};
    }

    if (cmd_sweep_delta->parsed()) {
      if (sd_deltas->count()) cfg.delta_grid = deltas_flag;
      if (sd_horizon->count()) cfg.horizon = horizon_flag;
      if (sd_repeats->count()) cfg.repeats = repeats_flag;
      if (sd_blocks->count()) cfg.n_blocks = blocks_flag;
      const ergo::RateReport report = ergo::sweep_delta(cfg);
      emit_report_files(cfg, "sweep_delta_" + cfg.problem_id + "_" + cfg.scheme_id, report,
                        "bias vs delta");
      std::cout << ergo::report_json(report);
      return check_slope_window(report, expect_min, expect_max);
    }

    if (cmd_sweep_time->parsed()) {
      if (st_times->count()) cfg.t_grid = times_flag;
      if (st_delta->count()) cfg.fixed_delta = fixed_delta_flag;
      if (st_repeats->count()) cfg.repeats = repeats_flag;
      if (st_blocks->count()) cfg.n_blocks = blocks_flag;
      const ergo::RateReport report = ergo::sweep_time(cfg);
      emit_report_files(cfg, "sweep_time_" + cfg.problem_id + "_" + cfg.scheme_id, report,
                        "MSE vs horizon");
      std::cout << ergo::report_json(report);
      return check_slope_window(report, expect_min, expect_max);
    }

    if (cmd_extrap->parsed()) {
      if (ex_deltas->count()) cfg.delta_grid = deltas_flag;
      if (ex_horizon->count()) cfg.horizon = horizon_flag;
      if (ex_repeats->count()) cfg.repeats = repeats_flag;
      if (ex_blocks->count()) cfg.n_blocks = blocks_flag;
      const ergo::ExtrapolationReport report = ergo::extrapolate_sweep(cfg);
      emit_report_files(cfg, "extrapolate_" + cfg.problem_id + "_" + cfg.scheme_id,
                        report.extrapolated, "extrapolated bias vs delta");
      emit_report_files(cfg, "extrapolate_raw_" + cfg.problem_id + "_" + cfg.scheme_id, report.raw,
                        "raw bias vs delta");
      std::cout << ergo::report_json(report.extrapolated);
      return check_slope_window(report.extrapolated, expect_min, expect_max);
    }

    if (cmd_dist->parsed()) {
      if (di_deltas->count()) cfg.delta_grid = deltas_flag;
      if (di_horizon->count()) cfg.horizon = horizon_flag;
      if (di_dict->count()) cfg.observables = dict_flag;
      else if (cmd_dist->count("--observable") == 0) cfg.observables.clear();  // default dictionary
      if (di_blocks->count()) cfg.n_blocks = blocks_flag;
      const ergo::DistanceReport report = ergo::distance_report(cfg, dist_p);
      namespace fs = std::filesystem;
      fs::create_directories(cfg.out_dir);
      const std::string base =
          (fs::path(cfg.out_dir) / ("distance_" + cfg.problem_id + "_" + cfg.scheme_id)).string();
      ergo::write_text_file(base + ".csv", ergo::distance_csv(report));
      ergo::write_text_file(base + ".json", ergo::distance_json(report));
      ergo::RateReport chart;  // adapter for the max-error curve
      chart.slope = report.slope;
      for (const auto& pt : report.points) {
        ergo::RatePoint rp;
        rp.param = pt.delta;
        rp.error = pt.max_error;
        rp.used_in_fit = true;
        chart.grid.push_back(rp);
      }
      if (!chart.grid.empty()) {
        chart.intercept = std::log(chart.grid.front().error) -
                          report.slope * std::log(chart.grid.front().param);
      }
      ergo::write_text_file(base + ".svg", ergo::loglog_svg(chart, "stationary-distance proxy"));
      std::cout << ergo::distance_json(report);
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }

  return 0;
}
