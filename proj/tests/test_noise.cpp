#include <doctest.h>

#include <cmath>
#include <set>

#include "ergo/noise.hpp"

using namespace ergo;

TEST_SUITE("noise") {

TEST_CASE("supports: rademacher in {-1, +1}, three-point in {-sqrt3, 0, sqrt3}") {
  const double sqrt3 = std::sqrt(3.0);
  RngStream stream{7, 0, 0};
  NoiseModel rad{NoiseKind::rademacher};
  NoiseModel tp{NoiseKind::three_point};
  for (int i = 0; i < 1000; ++i) {
    const double r = sample_scalar(rad, stream);
    CHECK((r == 1.0 || r == -1.0));
  }
  int zeros = 0;
  for (int i = 0; i < 3000; ++i) {
    const double t = sample_scalar(tp, stream);
    CHECK((t == 0.0 || t == sqrt3 || t == -sqrt3));
    if (t == 0.0) ++zeros;
  }
  CHECK(zeros > 1500);  // P(0) = 2/3
}

TEST_CASE("fixed (seed, stream, counter) reproduces the same vector") {
  NoiseModel model{NoiseKind::gaussian};
  RngStream a{123, 9, 55};
  RngStream b{123, 9, 55};
  const SmallVec va = sample_increment(model, a, 3);
  const SmallVec vb = sample_increment(model, b, 3);
  for (int i = 0; i < 3; ++i) CHECK(va[i] == vb[i]);
  CHECK(a.counter == 58);  // one tick per scalar draw
}

TEST_CASE("distinct stream ids decorrelate") {
  NoiseModel model{NoiseKind::gaussian};
  RngStream s1{99, 1, 0}, s2{99, 2, 0};
  const long long n = 1000000;
  double sum11 = 0, sum22 = 0, sum12 = 0, sum1 = 0, sum2 = 0;
  for (long long i = 0; i < n; ++i) {
    const double x = sample_scalar(model, s1);
    const double y = sample_scalar(model, s2);
    sum1 += x;
    sum2 += y;
    sum11 += x * x;
    sum22 += y * y;
    sum12 += x * y;
  }
  const double m1 = sum1 / n, m2 = sum2 / n;
  const double corr =
      (sum12 / n - m1 * m2) / std::sqrt((sum11 / n - m1 * m1) * (sum22 / n - m2 * m2));
  CHECK(std::abs(corr) <= 5.0 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("exact moment tables") {
  NoiseModel gauss{NoiseKind::gaussian};
  NoiseModel rad{NoiseKind::rademacher};
  NoiseModel tp{NoiseKind::three_point};
  for (const auto& model : {gauss, rad, tp}) {
    CHECK(model.exact_moment(1) == 0.0);
    CHECK(model.exact_moment(2) == 1.0);
    CHECK(model.exact_moment(3) == 0.0);
  }
  CHECK(gauss.exact_moment(4) == 3.0);
  CHECK(gauss.exact_moment(6) == 15.0);
  CHECK(gauss.exact_moment(8) == 105.0);
  CHECK(rad.exact_moment(4) == 1.0);
  CHECK(rad.exact_moment(8) == 1.0);
  CHECK(tp.exact_moment(4) == 3.0);  // matches the Gaussian through order 5
  CHECK(tp.exact_moment(5) == 0.0);
  CHECK(tp.exact_moment(6) == 9.0);
  CHECK(tp.exact_moment(8) == 27.0);
}

TEST_CASE("validate_moments passes all three laws to order 8 at 1e6 samples") {
  for (const auto kind : {NoiseKind::gaussian, NoiseKind::rademacher, NoiseKind::three_point}) {
    NoiseModel model{kind};
    const auto rows = validate_moments(model, 8, 1000000, RngStream{2024, 17, 0});
    REQUIRE(rows.size() == 8);
    for (const auto& row : rows) {
      INFO("kind=", noise_id(kind), " order=", row.order, " z=", row.z);
      CHECK(row.pass);
    }
  }
}

TEST_CASE("rademacher even sample moments are exactly one") {
  NoiseModel model{NoiseKind::rademacher};
  const auto rows = validate_moments(model, 4, 10000, RngStream{5, 5, 0});
  CHECK(rows[1].sample == 1.0);
  CHECK(rows[3].sample == 1.0);
  CHECK(rows[1].z == 0.0);
}

TEST_CASE("validate_moments rejects tiny sample counts") {
  NoiseModel model{NoiseKind::gaussian};
  CHECK_THROWS_AS(validate_moments(model, 4, 100, RngStream{}), std::invalid_argument);
}

TEST_CASE("gaussian draws look standard normal") {
  NoiseModel model{NoiseKind::gaussian};
  RngStream stream{31337, 3, 0};
  const long long n = 200000;
  double sum = 0, sumsq = 0;
  for (long long i = 0; i < n; ++i) {
    const double x = sample_scalar(model, stream);
    sum += x;
    sumsq += x * x;
  }
  CHECK(std::abs(sum / n) < 0.01);
  CHECK(sumsq / n == doctest::Approx(1.0).epsilon(0.01));
}

}  // TEST_SUITE
