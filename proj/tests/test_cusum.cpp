#include "rcusum/cusum.hpp"
#include "rcusum/errors.hpp"
#include "rcusum/lfp.hpp"
#include "rcusum/parallel.hpp"

#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

using namespace rcusum;

namespace {

// -phi = inc for every observation.
Detector constant(long d, double inc) {
  AffineDetector a;
  a.a = Vector::Zero(d);
  a.c = -inc;
  return a;
}

AffineDetector l1_detector(long d, double radius) {
  const Covariance id = Covariance::identity(d);
  const LfpSolution s = solve_lfp(VectorSet::singleton(Vector::Zero(d)), VectorSet::l1_ball(Vector::Ones(d), radius), id);
  return build_affine_detector(s, id);
}

}  // namespace

TEST_CASE("recursion steps") {
  CusumState s(100.0);
  s.statistic = 3.0;
  CHECK(step(s, -0.5).statistic == doctest::Approx(2.5));
  s.statistic = -1.2;
  CHECK(step(s, 0.2).statistic == doctest::Approx(0.2));
  CusumState a(1.0);
  a = step(a, 0.4);
  CHECK_FALSE(a.alarmed);
  a = step(a, 0.6);
  CHECK(a.alarmed);
  CHECK(a.time == 2);
  CHECK_THROWS_AS(step(a, 0.1), Error);
  a.reset();
  CHECK(a.statistic == 0.0);
  CHECK(a.time == 0);
  CHECK_FALSE(a.alarmed);
  CHECK(a.threshold == 1.0);
}

TEST_CASE("recursion equals the brute-force maximum over start times") {
  SeededStream rng(41, 0);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<double> inc(1000);
    for (double& x : inc) x = rng.normal() * (1 + rep % 3) - 0.1 * (rep % 5);
    CusumState s(1e300);
    for (std::size_t t = 0; t < inc.size(); ++t) {
      s = step(s, inc[t]);
      double best = -1e300, tail = 0.0;
      for (std::size_t k = t + 1; k-- > 0;) {
        tail += inc[k];
        best = std::max(best, tail);
      }
      worst = std::max(worst, std::abs(best - s.statistic));
    }
  }
  CHECK(worst <= 1e-12);
}

TEST_CASE("threshold from gamma") {
  CHECK(threshold_from_gamma(5000, 0.5) == doctest::Approx(std::log(5000.0)).epsilon(1e-14));
  const double l1 = threshold_from_gamma(5000, 0.963194);
  CHECK(l1 == doctest::Approx(std::log(5000.0) + std::log(0.963194 / (1 - 0.963194))).epsilon(1e-14));
  CHECK(std::abs(l1 - 11.78173) < 1e-4);
  CHECK(threshold_from_gamma(std::exp(5.0), std::exp(-1.0)) == doctest::Approx(4.45868).epsilon(1e-6));
  CHECK_THROWS_AS(threshold_from_gamma(5000, 1.0), DomainError);
  CHECK_THROWS_AS(threshold_from_gamma(5000, 0.0), DomainError);
  CHECK_THROWS_AS(threshold_from_gamma(1.0, 0.5), DomainError);
  CHECK(reference_threshold(constant(2, 1.0), 500) == doctest::Approx(std::log(500.0)));
  AffineDetector a = l1_detector(5, 4.5);
  CHECK(reference_threshold(a, 500) == threshold_from_gamma(500, a.epsilon_star));
}

TEST_CASE("stopping on deterministic increments") {
  const Gaussian g = Gaussian::standard(3);
  GaussianSource up(g, 1, 0);
  const StoppingResult r = run_until_alarm(constant(3, 1.0), up, 10.0, 1000);
  CHECK(r.alarm_time == 10);
  CHECK_FALSE(r.censored);
  CHECK(r.final_statistic == doctest::Approx(10.0));
  GaussianSource down(g, 1, 0);
  const StoppingResult c = run_until_alarm(constant(3, -1.0), down, 10.0, 500);
  CHECK(c.censored);
  CHECK(c.alarm_time == 500);
  CHECK(c.increments_consumed == 500);
  MatrixSource few(Matrix::Zero(3, 3));
  CHECK_THROWS_AS(run_until_alarm(constant(3, -1.0), few, 10.0, 500), Error);
  MatrixSource wrong(Matrix::Zero(3, 4));
  CHECK_THROWS_AS(run_until_alarm(constant(3, 1.0), wrong, 10.0, 5), DimensionError);
}

TEST_CASE("same seed reproduces the alarm time and larger b never alarms earlier") {
  const long d = 4;
  const AffineDetector det = l1_detector(d, 3.6);
  Vector shifted = Vector::Constant(d, 0.3);
  const Gaussian g(shifted, Covariance::identity(d));
  for (std::uint64_t run = 0; run < 50; ++run) {
    long prev = 0;
    for (double b : {0.5, 1.0, 2.0, 4.0, 8.0}) {
      GaussianSource s1(g, 9, run), s2(g, 9, run);
      const long t1 = run_until_alarm(det, s1, b, 100000).alarm_time;
      CHECK(t1 == run_until_alarm(det, s2, b, 100000).alarm_time);
      CHECK(t1 >= prev);
      prev = t1;
    }
  }
}

TEST_CASE("change source switches law at kappa") {
  const Gaussian pre(Vector::Constant(1, -100.0), Covariance::identity(1));
  const Gaussian post(Vector::Constant(1, 100.0), Covariance::identity(1));
  ChangeSource src(pre, post, 4, 3, 0);
  Vector x(1);
  for (int t = 1; t <= 6; ++t) {
    REQUIRE(src.next(x));
    CHECK((x(0) > 0) == (t >= 4));
  }
}

TEST_CASE("no-change runs do not depend on the thread count") {
  const AffineDetector det = l1_detector(5, 4.5);
  const Gaussian nu0 = Gaussian::standard(5);
  const auto a = simulate_no_change(det, 3.0, nu0, 300, 20000, 77, 1);
  const auto b = simulate_no_change(det, 3.0, nu0, 300, 20000, 77, 4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].alarm_time == b[i].alarm_time);
    CHECK(a[i].final_statistic == b[i].final_statistic);
  }
  std::atomic<int> ticks{0};
  simulate_no_change(det, 1.0, nu0, 120, 1000, 1, 3, [&] { ++ticks; });
  CHECK(ticks == 120);
}

TEST_CASE("parallel_for rethrows the lowest failing index") {
  std::vector<int> hit(100, 0);
  try {
    parallel_for(100, 4, [&](long i) {
      hit[i] = 1;
      if (i == 17 || i == 60) throw DomainError(std::to_string(i));
    });
    FAIL("expected an exception");
  } catch (const DomainError& e) {
    CHECK(std::string(e.what()) == "17");
  }
  std::vector<long> out(1000);
  parallel_for(1000, 8, [&](long i) { out[i] = i * i; });
  for (long i = 0; i < 1000; ++i) CHECK(out[i] == i * i);
}

TEST_CASE("calibration lands in the band and is conservative against the bound") {
  const long d = 10;
  const AffineDetector det = l1_detector(d, 9.0);
  const Gaussian nu0 = Gaussian::standard(d);
  CalibrationOptions opts;
  opts.threads = 2;
  const CalibrationResult r = calibrate_threshold_mc(det, nu0, 500.0, 200, 5, opts);
  CHECK(r.arl >= 0.95 * 500.0);
  CHECK(r.arl <= 1.05 * 500.0);
  CHECK(r.b <= threshold_from_gamma(500.0, det.epsilon_star) + 0.5);
  CHECK(r.evaluations >= 1);
  const CalibrationResult lo = calibrate_threshold_mc(det, nu0, 100.0, 200, 5, opts);
  const CalibrationResult hi = calibrate_threshold_mc(det, nu0, 1000.0, 200, 5, opts);
  CHECK(hi.b > lo.b);
}

TEST_CASE("calibration failures") {
  const Gaussian nu0 = Gaussian::standard(2);
  CHECK_THROWS_AS(calibrate_threshold_mc(constant(2, -1.0), nu0, 50.0, 100, 1), Error);
  CHECK_THROWS_AS(calibrate_threshold_mc(constant(2, 1.0), nu0, 50.0, 99, 1), DomainError);
  CHECK_THROWS_AS(calibrate_threshold_mc(constant(2, 1.0), nu0, 1.0, 100, 1), DomainError);
  // A deterministic ramp has ceil(b) as its run length: the band is met exactly.
  const CalibrationResult r = calibrate_threshold_mc(constant(2, 1.0), nu0, 50.0, 100, 1);
  CHECK(r.arl >= 47.5);
  CHECK(r.arl <= 52.5);
  // Unit steps give integer run lengths, so a 1% band around 2.5 is never met.
  CalibrationOptions tight;
  tight.tolerance = 0.01;
  CHECK_THROWS_AS(calibrate_threshold_mc(constant(2, 1.0), nu0, 2.5, 100, 1, tight), ConvergenceError);
}
