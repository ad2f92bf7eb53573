#include <doctest.h>

#include <cmath>
#include <vector>

#include "ergo/estimators.hpp"

using namespace ergo;

TEST_SUITE("estimators") {

TEST_CASE("time_average basics") {
  const std::vector<double> constant(17, 3.25);
  CHECK(time_average(constant) == doctest::Approx(3.25).epsilon(1e-15));
  const std::vector<double> ramp{1.0, 2.0, 3.0};
  CHECK(time_average(ramp) == doctest::Approx(2.0).epsilon(1e-15));
  const std::vector<double> single{0.7};
  CHECK(time_average(single) == 0.7);
  CHECK_THROWS_AS(time_average(std::vector<double>{}), std::invalid_argument);
}

TEST_CASE("block_statistics: two-point cases and the degenerate pair") {
  const std::vector<double> equal{1.0, 1.0};
  const BlockStats s0 = block_statistics(equal, 2.0);
  CHECK(s0.sampled_variance == 0.0);
  CHECK(s0.ci_halfwidth == 0.0);

  const std::vector<double> pair{0.0, 2.0};
  const BlockStats s1 = block_statistics(pair, 2.0);
  CHECK(s1.sampled_variance == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(s1.ci_halfwidth == doctest::Approx(2.0).epsilon(1e-15));

  CHECK_THROWS_WITH_AS(block_statistics(std::vector<double>{1.0}, 2.0), "need >= 2 blocks",
                       std::invalid_argument);
}

TEST_CASE("block_statistics: 1e4 standard normal block means have unit variance") {
  NoiseModel gauss{NoiseKind::gaussian};
  RngStream stream{2718, 31, 0};
  std::vector<double> means(10000);
  for (auto& m : means) m = sample_scalar(gauss, stream);
  const BlockStats stats = block_statistics(means, 2.0);
  CHECK(stats.sampled_variance >= 0.95);
  CHECK(stats.sampled_variance <= 1.05);
}

TEST_CASE("richardson extrapolation") {
  CHECK(richardson(1.0, 0.9, 1) == doctest::Approx(0.8).epsilon(1e-15));
  for (int p = 1; p <= 5; ++p) CHECK(richardson(0.31, 0.31, p) == 0.31);
  CHECK_THROWS_AS(richardson(1.0, 0.9, 0), std::invalid_argument);
}

TEST_CASE("constant observable gives exact mean and zero variance") {
  const SdeProblem problem = problem_by_id("grad1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable one = observable_by_id("const", 1);
  const EstimatorResult res = run_time_average(problem, em, gauss, one, TorusPoint::origin(1),
                                               0.05, 6400, 32, RngStream{1, 1, 0});
  CHECK(res.value == 1.0);
  CHECK(res.sampled_variance == 0.0);
  CHECK(res.horizon == doctest::Approx(320.0));
  CHECK(static_cast<int>(res.block_means.size()) == 32);
}

TEST_CASE("zero1d: uniform stationary law puts cos within the confidence interval") {
  const SdeProblem problem = problem_by_id("zero1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable cosx = observable_by_id("cos_1", 1);
  // T = 1e4 at delta = 0.01
  const EstimatorResult res = run_time_average(problem, em, gauss, cosx, TorusPoint::origin(1),
                                               0.01, 1000000, 32, RngStream{7, 3, 0});
  INFO("value=", res.value, " ci=", res.ci_halfwidth);
  CHECK(std::abs(res.value) <= res.ci_halfwidth);
}

TEST_CASE("grad1d: time average reproduces the Gibbs mean of cos") {
  const SdeProblem problem = problem_by_id("grad1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable cosx = observable_by_id("cos_1", 1);
  // T = 2e4 at delta = 0.01; bias O(delta) is well inside the CI here
  const EstimatorResult res = run_time_average(problem, em, gauss, cosx, TorusPoint::origin(1),
                                               0.01, 2000000, 32, RngStream{11, 5, 0});
  INFO("value=", res.value, " ci=", res.ci_halfwidth);
  CHECK(std::abs(res.value - 0.697775) <= res.ci_halfwidth + 0.01);
}

TEST_CASE("streaming accumulation matches the batch mean to 1e-12") {
  const SdeProblem problem = problem_by_id("grad1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable cosx = observable_by_id("cos_1", 1);
  const long long n = 100000;

  const EstimatorResult streamed = run_time_average(problem, em, gauss, cosx,
                                                    TorusPoint::origin(1), 0.05, n, 20,
                                                    RngStream{13, 9, 0});

  // replay the trajectory, store every value, average the batch
  RngStream stream{13, 9, 0};
  TorusPoint x = TorusPoint::origin(1);
  std::vector<double> values;
  values.reserve(static_cast<size_t>(n));
  for (long long i = 0; i < n; ++i) {
    values.push_back(cosx(x));
    const SmallVec eta = sample_increment(gauss, stream, 1);
    x = scheme_step(problem, em, x, 0.05, eta);
  }
  const double batch = time_average(values);
  CHECK(std::abs(streamed.value - batch) <= 1e-12 * std::max(1.0, std::abs(batch)));
}

TEST_CASE("linearity of the time average over one trajectory") {
  const SdeProblem problem = problem_by_id("grad1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const double alpha = 1.75, beta = -0.4;
  Observable combo;
  combo.label = "combo";
  const Observable cosx = observable_by_id("cos_1", 1);
  const Observable sinx = observable_by_id("sin_1", 1);
  combo.eval = [&, alpha, beta](const TorusPoint& x) { return alpha * cosx(x) + beta * sinx(x); };

  const auto results = run_multi_average(problem, em, gauss, {cosx, sinx, combo},
                                         TorusPoint::origin(1), 0.05, 50000, 10,
                                         RngStream{17, 2, 0});
  const double lhs = results[2].value;
  const double rhs = alpha * results[0].value + beta * results[1].value;
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-13));
}

TEST_CASE("block means are consistent with the global mean") {
  const SdeProblem problem = problem_by_id("nongrad2d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable obs = observable_by_id("cos_1_0", 2);
  const EstimatorResult res = run_time_average(problem, em, gauss, obs, TorusPoint::origin(2),
                                               0.02, 64000, 32, RngStream{19, 4, 0});
  KahanSum sum;
  for (double b : res.block_means) sum.add(b);
  const double mean_of_blocks = sum.value() / static_cast<double>(res.block_means.size());
  CHECK(std::abs(mean_of_blocks - res.value) <= 1e-12 * std::max(1.0, std::abs(res.value)));
}

TEST_CASE("divisibility precondition") {
  const SdeProblem problem = problem_by_id("zero1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable obs = observable_by_id("cos_1", 1);
  CHECK_THROWS_AS(run_time_average(problem, em, gauss, obs, TorusPoint::origin(1), 0.01, 1001, 32,
                                   RngStream{}),
                  std::invalid_argument);
}

TEST_CASE("run_time_average is bit-reproducible") {
  const SdeProblem problem = problem_by_id("grad1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable obs = observable_by_id("cos_1", 1);
  const EstimatorResult a = run_time_average(problem, em, gauss, obs, TorusPoint::origin(1), 0.02,
                                             32000, 16, RngStream{23, 8, 0});
  const EstimatorResult b = run_time_average(problem, em, gauss, obs, TorusPoint::origin(1), 0.02,
                                             32000, 16, RngStream{23, 8, 0});
  CHECK(a.value == b.value);
  CHECK(a.sampled_variance == b.sampled_variance);
  for (size_t i = 0; i < a.block_means.size(); ++i) CHECK(a.block_means[i] == b.block_means[i]);
}

TEST_CASE("ensemble_average: no steps at t_final = 0") {
  const SdeProblem problem = problem_by_id("grad1d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable cosx = observable_by_id("cos_1", 1);
  const TorusPoint x0 = wrap(SmallVec{1.2});
  const EnsembleResult res =
      ensemble_average(problem, em, gauss, cosx, 0.0, 0.01, 16, x0, RngStream{29, 100, 0});
  CHECK(res.mean == doctest::Approx(std::cos(1.2)).epsilon(1e-15));
  CHECK(res.std_error == 0.0);
}

TEST_CASE("ensemble_average: zero1d symmetry and grad1d mean") {
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable cosx = observable_by_id("cos_1", 1);

  const SdeProblem zero1d = problem_by_id("zero1d");
  const EnsembleResult z = ensemble_average(zero1d, em, gauss, cosx, 20.0, 0.02, 2000,
                                            TorusPoint::origin(1), RngStream{31, 1000, 0}, 2);
  INFO("zero1d mean=", z.mean, " se=", z.std_error);
  CHECK(std::abs(z.mean) <= 5.0 * z.std_error);

  const SdeProblem grad1d = problem_by_id("grad1d");
  const EnsembleResult g = ensemble_average(grad1d, em, gauss, cosx, 20.0, 0.01, 2000,
                                            TorusPoint::origin(1), RngStream{31, 5000, 0}, 2);
  INFO("grad1d mean=", g.mean, " se=", g.std_error);
  CHECK(std::abs(g.mean - 0.697775) <= 5.0 * g.std_error + 0.05);
}

TEST_CASE("ensemble_average is schedule independent") {
  const SdeProblem problem = problem_by_id("nongrad2d");
  const SchemeConfig em = SchemeConfig::by_id("explicit_em");
  const NoiseModel gauss{NoiseKind::gaussian};
  const Observable obs = observable_by_id("cos_1_0", 2);
  const EnsembleResult serial = ensemble_average(problem, em, gauss, obs, 5.0, 0.05, 400,
                                                 TorusPoint::origin(2), RngStream{37, 0, 0}, 1);
  const EnsembleResult parallel = ensemble_average(problem, em, gauss, obs, 5.0, 0.05, 400,
                                                   TorusPoint::origin(2), RngStream{37, 0, 0}, 4);
  CHECK(serial.mean == parallel.mean);
  CHECK(serial.std_error == parallel.std_error);
}

}  // TEST_SUITE
