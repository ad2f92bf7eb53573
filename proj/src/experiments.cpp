#include "ergo/experiments.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "ergo/parallel.hpp"

namespace ergo {

namespace {

using nlohmann::json;

long long steps_for(double horizon, double delta, int n_blocks) {
  long long n = std::llround(horizon / delta);
  const long long b = n_blocks;
  n = ((n + b / 2) / b) * b;  // nearest multiple of the block count
  return std::max(n, b);
}

struct RunSetup {
  SdeProblem problem;
  SchemeConfig scheme;
  NoiseModel noise_model;
  Observable observable;
};

RunSetup make_setup(const SweepConfig& cfg) {
  RunSetup s{problem_by_id(cfg.problem_id), SchemeConfig::by_id(cfg.scheme_id),
             NoiseModel{noise_kind_by_id(cfg.noise)}, Observable{}};
  if (cfg.observables.empty()) throw std::invalid_argument("config: need at least one observable");
  s.observable = observable_by_id(cfg.observables.front(), s.problem.d);
  return s;
}

void validate_delta_grid(const std::vector<double>& grid) {
  if (grid.size() < 2) throw std::invalid_argument("config: delta_grid needs >= 2 entries");
  for (size_t i = 0; i + 1 < grid.size(); ++i) {
    if (!(grid[i] > grid[i + 1]))
      throw std::invalid_argument("config: delta_grid must be strictly decreasing");
    if (std::abs(grid[i] / grid[i + 1] - 2.0) > 1e-9)
      throw std::invalid_argument("config: delta_grid must be geometric with ratio 2");
  }
}

// mean of the repeat values and the standard error of that mean
void repeat_stats(const std::vector<double>& values, double& mean, double& stderr_mean) {
  KahanSum sum;
  for (double v : values) sum.add(v);
  const double n = static_cast<double>(values.size());
  mean = sum.value() / n;
  if (values.size() < 2) {
    stderr_mean = 0.0;
    return;
  }
  KahanSum ss;
  for (double v : values) ss.add((v - mean) * (v - mean));
  stderr_mean = std::sqrt(ss.value() / (n - 1.0) / n);
}

void fit_into_report(RateReport& report, std::size_t min_points = 3) {
  std::vector<double> param, err, se;
  for (const auto& pt : report.grid) {
    param.push_back(pt.param);
    err.push_back(pt.error);
    se.push_back(pt.error_stderr);
  }
  std::vector<bool> mask;
  const LineFit fit = loglog_fit(param, err, se, &mask, 2.0, min_points);
  report.slope = fit.slope;
  report.intercept = fit.intercept;
  report.r2 = fit.r2;
  int excluded = 0;
  for (size_t i = 0; i < report.grid.size(); ++i) {
    report.grid[i].used_in_fit = mask[i];
    excluded += mask[i] ? 0 : 1;
  }
  if (excluded > 0)
    report.warnings.push_back("excluded " + std::to_string(excluded) +
                              " noise-dominated grid point(s) from the fit");
}

}  // namespace

double oracle_phi_bar(const SdeProblem& problem, const Observable& observable, int cutoff) {
  const bool gibbs_eligible = problem.has_potential() && problem.constant_diffusion &&
                              problem.d == problem.m;
  if (gibbs_eligible) {
    const SmallMat g = problem.diffusion(TorusPoint::origin(problem.d));
    bool scalar = true;
    for (int i = 0; i < problem.d && scalar; ++i)
      for (int j = 0; j < problem.d && scalar; ++j)
        if (std::abs(g(i, j) - (i == j ? g(0, 0) : 0.0)) > 1e-14) scalar = false;
    if (scalar && g(0, 0) > 0) return gibbs_average(problem, observable);
  }
  const SpectralDensity density = solve_stationary_density(problem, cutoff);
  return stationary_average(density, observable);
}

std::uint64_t repeat_stream_id(const std::string& problem_id, const std::string& scheme_id,
                               double delta, long long repeat) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a 64
  auto mix = [&h](const void* data, size_t len) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  };
  mix(problem_id.data(), problem_id.size());
  mix("|", 1);
  mix(scheme_id.data(), scheme_id.size());
  mix("|", 1);
  mix(&delta, sizeof(delta));
  mix(&repeat, sizeof(repeat));
  return h;
}

RateReport sweep_delta(const SweepConfig& cfg) {
  validate_delta_grid(cfg.delta_grid);
  if (cfg.repeats < 1) throw std::invalid_argument("config: repeats >= 1");
  RunSetup setup = make_setup(cfg);

  RateReport report;
  report.reference_value = oracle_phi_bar(setup.problem, setup.observable, cfg.cutoff);

  for (double delta : cfg.delta_grid) {
    const long long n_steps = steps_for(cfg.horizon, delta, cfg.n_blocks);
    std::vector<double> values(static_cast<size_t>(cfg.repeats));
    par_for(cfg.repeats, cfg.threads, [&](long long r) {
      RngStream stream{cfg.seed, repeat_stream_id(cfg.problem_id, cfg.scheme_id, delta, r), 0};
      const EstimatorResult res =
          run_time_average(setup.problem, setup.scheme, setup.noise_model, setup.observable,
                           TorusPoint::origin(setup.problem.d), delta, n_steps, cfg.n_blocks,
                           stream, cfg.burnin);
      values[static_cast<size_t>(r)] = res.value;
    });

    RatePoint pt;
    pt.param = delta;
    repeat_stats(values, pt.value, pt.error_stderr);
    pt.error = std::abs(pt.value - report.reference_value);
    pt.oracle_value = report.reference_value;
    pt.ci_halfwidth = 2.0 * pt.error_stderr;
    pt.repeats = cfg.repeats;
    report.grid.push_back(pt);
  }

  fit_into_report(report);

  // post-hoc 1/T guard: the fitted bias at the smallest delta should dominate
  // the finite-horizon term (coefficient treated as order one)
  const double delta_min = cfg.delta_grid.back();
  const double fitted_bias = std::exp(report.intercept + report.slope * std::log(delta_min));
  if (1.0 / cfg.horizon > 0.1 * fitted_bias)
    report.warnings.push_back("one_over_T_guard: 1/T exceeds 10% of fitted bias at smallest delta");
  return report;
}

RateReport sweep_time(const SweepConfig& cfg) {
  if (cfg.t_grid.size() < 2) throw std::invalid_argument("config: t_grid needs >= 2 entries");
  if (cfg.repeats < 2) throw std::invalid_argument("config: sweep_time needs repeats >= 2");
  RunSetup setup = make_setup(cfg);

  RateReport report;
  report.reference_value = oracle_phi_bar(setup.problem, setup.observable, cfg.cutoff);

  for (double horizon : cfg.t_grid) {
    const long long n_steps = steps_for(horizon, cfg.fixed_delta, cfg.n_blocks);
    std::vector<double> sq_err(static_cast<size_t>(cfg.repeats));
    std::vector<double> values(static_cast<size_t>(cfg.repeats));
    par_for(cfg.repeats, cfg.threads, [&](long long r) {
      RngStream stream{cfg.seed,
                       repeat_stream_id(cfg.problem_id, cfg.scheme_id, horizon + cfg.fixed_delta, r),
                       0};
      const EstimatorResult res =
          run_time_average(setup.problem, setup.scheme, setup.noise_model, setup.observable,
                           TorusPoint::origin(setup.problem.d), cfg.fixed_delta, n_steps,
                           cfg.n_blocks, stream, cfg.burnin);
      values[static_cast<size_t>(r)] = res.value;
      const double e = res.value - report.reference_value;
      sq_err[static_cast<size_t>(r)] = e * e;
    });

    RatePoint pt;
    pt.param = horizon;
    repeat_stats(sq_err, pt.error, pt.error_stderr);  // error = MSE here
    double mean_value, se_value;
    repeat_stats(values, mean_value, se_value);
    pt.value = mean_value;
    pt.oracle_value = report.reference_value;
    pt.ci_halfwidth = 2.0 * se_value;
    pt.repeats = cfg.repeats;
    report.grid.push_back(pt);
  }

  bool all_zero = true;
  for (const auto& pt : report.grid) all_zero = all_zero && pt.error == 0.0;
  if (all_zero) {
    report.warnings.push_back("degenerate: zero MSE at every horizon");
    return report;
  }

  fit_into_report(report);
  return report;
}

ExtrapolationReport extrapolate_sweep(const SweepConfig& cfg) {
  validate_delta_grid(cfg.delta_grid);
  if (cfg.repeats < 2) throw std::invalid_argument("config: extrapolate needs repeats >= 2");
  RunSetup setup = make_setup(cfg);
  const int p = setup.scheme.weak_order;

  ExtrapolationReport out;
  const double phi_bar = oracle_phi_bar(setup.problem, setup.observable, cfg.cutoff);
  out.extrapolated.reference_value = phi_bar;
  out.raw.reference_value = phi_bar;

  for (double delta : cfg.delta_grid) {
    const double delta_fine = delta / 2.0;
    const long long n_coarse = steps_for(cfg.horizon, delta, cfg.n_blocks);
    const long long n_fine = steps_for(cfg.horizon, delta_fine, cfg.n_blocks);

    std::vector<double> coarse(static_cast<size_t>(cfg.repeats));
    std::vector<double> extrap(static_cast<size_t>(cfg.repeats));
    par_for(cfg.repeats, cfg.threads, [&](long long r) {
      RngStream sc{cfg.seed, repeat_stream_id(cfg.problem_id, cfg.scheme_id, delta, r), 0};
      RngStream sf{cfg.seed, repeat_stream_id(cfg.problem_id, cfg.scheme_id, delta_fine, r), 0};
      const double vc =
          run_time_average(setup.problem, setup.scheme, setup.noise_model, setup.observable,
                           TorusPoint::origin(setup.problem.d), delta, n_coarse, cfg.n_blocks, sc,
                           cfg.burnin)
              .value;
      const double vf =
          run_time_average(setup.problem, setup.scheme, setup.noise_model, setup.observable,
                           TorusPoint::origin(setup.problem.d), delta_fine, n_fine, cfg.n_blocks,
                           sf, cfg.burnin)
              .value;
      coarse[static_cast<size_t>(r)] = vc;
      extrap[static_cast<size_t>(r)] = richardson(vc, vf, p);
    });

    RatePoint pe, pr;
    pe.param = pr.param = delta;
    pe.repeats = pr.repeats = cfg.repeats;
    pe.oracle_value = pr.oracle_value = phi_bar;

    repeat_stats(extrap, pe.value, pe.error_stderr);
    pe.error = std::abs(pe.value - phi_bar);
    pe.ci_halfwidth = 2.0 * pe.error_stderr;
    out.extrapolated.grid.push_back(pe);

    repeat_stats(coarse, pr.value, pr.error_stderr);
    pr.error = std::abs(pr.value - phi_bar);
    pr.ci_halfwidth = 2.0 * pr.error_stderr;
    out.raw.grid.push_back(pr);
  }

  fit_into_report(out.extrapolated);
  fit_into_report(out.raw);
  return out;
}

DistanceReport distance_report(const SweepConfig& cfg, int p) {
  validate_delta_grid(cfg.delta_grid);
  if (p < 1) throw std::invalid_argument("distance_report: p >= 1");
  const SdeProblem problem = problem_by_id(cfg.problem_id);
  const SchemeConfig scheme = SchemeConfig::by_id(cfg.scheme_id);
  const NoiseModel noise{noise_kind_by_id(cfg.noise)};

  std::vector<Observable> dict;
  if (cfg.observables.empty() || (cfg.observables.size() == 1 && cfg.observables[0] == "default")) {
    dict = distance_dictionary(problem.d);
  } else {
    for (const auto& id : cfg.observables) dict.push_back(observable_by_id(id, problem.d));
  }

  // oracle averages for every member against one density
  const SpectralDensity density = solve_stationary_density(problem, cfg.cutoff);
  std::vector<double> phi_bars(dict.size());
  std::vector<double> h_norms(dict.size());
  for (size_t i = 0; i < dict.size(); ++i) {
    phi_bars[i] = stationary_average(density, dict[i]);
    h_norms[i] = dict[i].derivative_norm(2 * p);
  }

  DistanceReport report;
  report.points.resize(cfg.delta_grid.size());
  par_for(static_cast<long long>(cfg.delta_grid.size()), cfg.threads, [&](long long di) {
    const double delta = cfg.delta_grid[static_cast<size_t>(di)];
    const long long n_steps = steps_for(cfg.horizon, delta, cfg.n_blocks);
    RngStream stream{cfg.seed, repeat_stream_id(cfg.problem_id, cfg.scheme_id, delta, 0), 0};
    const auto results =
        run_multi_average(problem, scheme, noise, dict, TorusPoint::origin(problem.d), delta,
                          n_steps, cfg.n_blocks, stream, cfg.burnin);

    DistancePoint pt;
    pt.delta = delta;
    for (size_t i = 0; i < dict.size(); ++i) {
      DistanceEntry entry;
      entry.label = dict[i].label;
      entry.h_norm = h_norms[i];
      entry.error = std::abs(results[i].value - phi_bars[i]) / h_norms[i];
      entry.ci_halfwidth = results[i].ci_halfwidth / h_norms[i];
      if (entry.error > pt.max_error) {
        pt.max_error = entry.error;
        pt.max_error_se = entry.ci_halfwidth / 2.0;
      }
      pt.entries.push_back(std::move(entry));
    }
    report.points[static_cast<size_t>(di)] = std::move(pt);
  });

  std::vector<double> param, err, se;
  for (const auto& pt : report.points) {
    param.push_back(pt.delta);
    err.push_back(pt.max_error);
    se.push_back(pt.max_error_se);
  }
  try {
    std::vector<bool> mask;
    const LineFit fit = loglog_fit(param, err, se, &mask, 2.0, 2);
    report.slope = fit.slope;
    report.r2 = fit.r2;
  } catch (const std::runtime_error&) {
    report.warnings.push_back("all points noise-dominated");
  }
  return report;
}

SweepConfig config_from_json_text(const std::string& text) {
  json doc = json::parse(text);
  if (!doc.is_object()) throw std::invalid_argument("config: top level must be an object");

  SweepConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    if (key == "problem_id") cfg.problem_id = value.get<std::string>();
    else if (key == "scheme_id") cfg.scheme_id = value.get<std::string>();
    else if (key == "noise") cfg.noise = value.get<std::string>();
    else if (key == "observables") cfg.observables = value.get<std::vector<std::string>>();
    else if (key == "delta_grid") cfg.delta_grid = value.get<std::vector<double>>();
    else if (key == "horizon") cfg.horizon = value.get<double>();
    else if (key == "t_grid") cfg.t_grid = value.get<std::vector<double>>();
    else if (key == "fixed_delta") cfg.fixed_delta = value.get<double>();
    else if (key == "repeats") cfg.repeats = value.get<int>();
    else if (key == "n_blocks") cfg.n_blocks = value.get<int>();
    else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "burnin") cfg.burnin = value.get<long long>();
    else if (key == "threads") cfg.threads = value.get<int>();
    else if (key == "cutoff") cfg.cutoff = value.get<int>();
    else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
    else throw std::invalid_argument("config: unknown key \"" + key + "\"");
  }
  return cfg;
}

SweepConfig config_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json_text(ss.str());
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string sweep_csv(const RateReport& report) {
  std::string out = "param,error,error_stderr,value,oracle,ci_halfwidth,repeats\n";
  for (const auto& pt : report.grid) {
    out += format_double(pt.param) + "," + format_double(pt.error) + "," +
           format_double(pt.error_stderr) + "," + format_double(pt.value) + "," +
           format_double(pt.oracle_value) + "," + format_double(pt.ci_halfwidth) + "," +
           std::to_string(pt.repeats) + "\n";
  }
  return out;
}

std::string report_json(const RateReport& report) {
  json doc;
  doc["slope"] = report.slope;
  doc["intercept"] = report.intercept;
  doc["r2"] = report.r2;
  doc["warnings"] = report.warnings;
  return doc.dump(2) + "\n";
}

std::string distance_csv(const DistanceReport& report) {
  std::string out = "delta,observable,error,ci_halfwidth,h_norm,max_error\n";
  for (const auto& pt : report.points)
    for (const auto& e : pt.entries) {
      out += format_double(pt.delta) + "," + e.label + "," + format_double(e.error) + "," +
             format_double(e.ci_halfwidth) + "," + format_double(e.h_norm) + "," +
             format_double(pt.max_error) + "\n";
    }
  return out;
}

std::string distance_json(const DistanceReport& report) {
  json doc;
  doc["slope"] = report.slope;
  doc["r2"] = report.r2;
  doc["warnings"] = report.warnings;
  json pts = json::array();
  for (const auto& pt : report.points) {
    json jp;
    jp["delta"] = pt.delta;
    jp["max_error"] = pt.max_error;
    pts.push_back(jp);
  }
  doc["points"] = pts;
  return doc.dump(2) + "\n";
}

std::string loglog_svg(const RateReport& report, const std::string& title) {
  // minimal log-log scatter + fitted line, 480x360 viewport
  const double W = 480, H = 360, ML = 60, MR = 20, MT = 30, MB = 40;
  double xmin = 1e300, xmax = -1e300, ymin = 1e300, ymax = -1e300;
  for (const auto& pt : report.grid) {
    if (pt.param <= 0 || pt.error <= 0) continue;
    xmin = std::min(xmin, std::log10(pt.param));
    xmax = std::max(xmax, std::log10(pt.param));
    ymin = std::min(ymin, std::log10(pt.error));
    ymax = std::max(ymax, std::log10(pt.error));
  }
  if (xmin > xmax) {
    xmin = 0;
    xmax = 1;
    ymin = 0;
    ymax = 1;
  }
  if (xmax - xmin < 1e-12) xmax = xmin + 1;
  if (ymax - ymin < 1e-12) ymax = ymin + 1;
  auto px = [&](double lx) { return ML + (lx - xmin) / (xmax - xmin) * (W - ML - MR); };
  auto py = [&](double ly) { return H - MB - (ly - ymin) / (ymax - ymin) * (H - MT - MB); };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" viewBox=\"0 0 " << W << " " << H << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << W / 2 << "\" y=\"18\" text-anchor=\"middle\" font-size=\"13\">" << title
      << " (slope " << format_double(report.slope) << ")</text>\n";
  svg << "<line x1=\"" << ML << "\" y1=\"" << H - MB << "\" x2=\"" << W - MR << "\" y2=\""
      << H - MB << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << ML << "\" y1=\"" << MT << "\" x2=\"" << ML << "\" y2=\"" << H - MB
      << "\" stroke=\"black\"/>\n";
  // fitted line across the param range
  {
    const double ly1 = (report.intercept + report.slope * std::log(std::pow(10.0, xmin))) / std::log(10.0);
    const double ly2 = (report.intercept + report.slope * std::log(std::pow(10.0, xmax))) / std::log(10.0);
    svg << "<line x1=\"" << px(xmin) << "\" y1=\"" << py(ly1) << "\" x2=\"" << px(xmax)
        << "\" y2=\"" << py(ly2) << "\" stroke=\"steelblue\" stroke-dasharray=\"4 3\"/>\n";
  }
  for (const auto& pt : report.grid) {
    if (pt.param <= 0 || pt.error <= 0) continue;
    svg << "<circle cx=\"" << px(std::log10(pt.param)) << "\" cy=\"" << py(std::log10(pt.error))
        << "\" r=\"3.5\" fill=\"" << (pt.used_in_fit ? "crimson" : "gray") << "\"/>\n";
  }
  svg << "<text x=\"" << (W - MR) << "\" y=\"" << H - 10
      << "\" text-anchor=\"end\" font-size=\"11\">log10 param</text>\n";
  svg << "<text x=\"12\" y=\"" << MT << "\" font-size=\"11\">log10 error</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << content;
}

}  // namespace ergo
