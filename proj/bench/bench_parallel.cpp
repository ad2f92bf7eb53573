// Serial vs OpenMP comparison for the trajectory-ensemble kernels, with a
// bitwise equality check between the two paths.

#include <chrono>
#include <cstdio>

#include "ergo/estimators.hpp"
#include "ergo/experiments.hpp"
#include "ergo/parallel.hpp"

using namespace ergo;

namespace {

double time_call(const std::function<void()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

int main(int argc, char** argv) {
  const int threads = argc > 1 ? std::atoi(argv[1]) : hardware_threads();
  std::printf("ensemble kernels, serial vs %d threads\n", threads);

  const SdeProblem problem = problem_by_id("grad1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable cosx = observable_by_id("cos_1", 1);

  // ensemble averaging: L independent trajectories
  EnsembleResult serial_ens, parallel_ens;
  const double t_serial_ens = time_call([&] {
    serial_ens = ensemble_average(problem, em, gauss, cosx, 50.0, 0.01, 2000,
                                  TorusPoint::origin(1), RngStream{1, 0, 0}, 1);
  });
  const double t_parallel_ens = time_call([&] {
    parallel_ens = ensemble_average(problem, em, gauss, cosx, 50.0, 0.01, 2000,
                                    TorusPoint::origin(1), RngStream{1, 0, 0}, threads);
  });
  std::printf("ensemble_average   serial %6.2fs   parallel %6.2fs   speedup %.2fx   bitwise %s\n",
              t_serial_ens, t_parallel_ens, t_serial_ens / t_parallel_ens,
              serial_ens.mean == parallel_ens.mean ? "equal" : "DIFFERENT");

  // repeat sweep: independent time-averaging runs per grid point
  SweepConfig cfg;
  cfg.problem_id = "grad1d";
  cfg.scheme_id = "explicit_em";
  cfg.observables = {"cos_1"};
  cfg.delta_grid = {0.4, 0.2, 0.1};
  cfg.horizon = 4000.0;
  cfg.repeats = 32;
  cfg.n_blocks = 32;
  cfg.seed = 2;

  RateReport serial_sweep, parallel_sweep;
  cfg.threads = 1;
  const double t_serial_sweep = time_call([&] { serial_sweep = sweep_delta(cfg); });
  cfg.threads = threads;
  const double t_parallel_sweep = time_call([&] { parallel_sweep = sweep_delta(cfg); });
  std::printf("sweep_delta        serial %6.2fs   parallel %6.2fs   speedup %.2fx   bitwise %s\n",
              t_serial_sweep, t_parallel_sweep, t_serial_sweep / t_parallel_sweep,
              sweep_csv(serial_sweep) == sweep_csv(parallel_sweep) ? "equal" : "DIFFERENT");

  // weak-order certificate: samples distributed across streams
  OrderCheckReport serial_order, parallel_order;
  const auto order_cfg = SchemeConfig::by_id("explicit_em");
  const double t_serial_order = time_call([&] {
    serial_order = weak_order_check(order_cfg, problem, {0.4, 0.2}, 1, 200000, RngStream{3, 0, 0},
                                    NoiseModel{NoiseKind::gaussian}, 128, 1);
  });
  const double t_parallel_order = time_call([&] {
    parallel_order = weak_order_check(order_cfg, problem, {0.4, 0.2}, 1, 200000,
                                      RngStream{3, 0, 0}, NoiseModel{NoiseKind::gaussian}, 128,
                                      threads);
  });
  const bool order_equal =
      serial_order.points[0].max_defect == parallel_order.points[0].max_defect &&
      serial_order.points[1].max_defect == parallel_order.points[1].max_defect;
  std::printf("weak_order_check   serial %6.2fs   parallel %6.2fs   speedup %.2fx   bitwise %s\n",
              t_serial_order, t_parallel_order, t_serial_order / t_parallel_order,
              order_equal ? "equal" : "DIFFERENT");

  return 0;
}
