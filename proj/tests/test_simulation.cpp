#include "rcusum/errors.hpp"
#include "rcusum/simulation.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>

using namespace rcusum;

namespace {

Detector constant(long d, double inc) {
  AffineDetector a;
  a.a = Vector::Zero(d);
  a.c = -inc;
  a.epsilon_star = 0.5;
  return a;
}

AffineDetector l1_detector(long d, double radius) {
  const Covariance id = Covariance::identity(d);
  const LfpSolution s = solve_lfp(VectorSet::singleton(Vector::Zero(d)), VectorSet::l1_ball(Vector::Ones(d), radius), id);
  return build_affine_detector(s, id);
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_distance(std::vector<long> a, std::vector<long> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double worst = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    const long x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    worst = std::max(worst, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return worst;
}

// E[exp(-(x^T H x / 2 + h^T x + k))] for x ~ N(m, S), closed form.
double quadratic_mgf_minus(const QuadraticDetector& q, const Gaussian& g) {
  const Matrix& s = g.covariance().matrix();
  const Vector& m = g.mean();
  const long d = m.size();
  const Matrix a = Matrix::Identity(d, d) + s * q.H;
  const Vector b = q.H * m + q.h;
  const double e = -(0.5 * m.dot(q.H * m) + q.h.dot(m) + q.kappa_const) + 0.5 * b.dot(a.lu().solve(s * b));
  return std::exp(e) / std::sqrt(a.determinant());
}

const char* kSmallConfig = R"(
dimension: 3
gamma: 40
seed: 11
threshold_mode: theoretical
trials: {arl: 100, delay: 100}
horizon: {arl_factor: 20, delay: 2000}
scenarios:
  - name: mean
    kind: mean_shift
    covariance: {identity: 1}
    M0: {singleton: 0}
    M1: {l1_ball: {center: 1, radius: 2}}
    truth: {uniform_box: {low: 0.3, high: 0.9}}
    baseline: {pre_mean: 0, post_mean: 1}
  - name: fixed
    kind: mean_shift
    covariance: {identity: 1}
    M0: {singleton: 0}
    M1: {singleton: [1, 0.5, 0]}
    truth: random_member
    baseline: {pre_mean: 0, post_mean: 1}
  - name: cov
    kind: covariance_shift
    mean0: 0
    mean1: 0
    U0: {singleton: {identity: 1}}
    U1: {spectral_ball: {radius: 0.4}}
    truth: random_member
    baseline: {pre_covariance: {identity: 1}, post_covariance: random_member}
)";

}  // namespace

TEST_CASE("ARL on deterministic increments") {
  const Gaussian g = Gaussian::standard(2);
  const ArlEstimate up = estimate_arl(constant(2, 1.0), 10.0, g, 100, 1000, 1);
  CHECK(up.mean == 10.0);
  CHECK(up.se == 0.0);
  CHECK(up.censored_fraction == 0.0);
  const ArlEstimate down = estimate_arl(constant(2, -1.0), 10.0, g, 100, 1000, 1);
  CHECK(down.mean == 1000.0);
  CHECK(down.censored_fraction == 1.0);
  CHECK(down.horizon == 1000);
  CHECK_THROWS_AS(estimate_arl(constant(2, 1.0), 10.0, g, 99, 1000, 1), DomainError);
}

TEST_CASE("ARL is reproducible and thread independent") {
  const AffineDetector det = l1_detector(4, 3.0);
  const Gaussian g = Gaussian::standard(4);
  const ArlEstimate a = estimate_arl(det, 2.0, g, 200, 5000, 3, {1, {}});
  const ArlEstimate b = estimate_arl(det, 2.0, g, 200, 5000, 3, {5, {}});
  CHECK(a.mean == b.mean);
  CHECK(a.se == b.se);
  CHECK(a.censored_fraction == b.censored_fraction);
  CHECK(a.se > 0.0);
  const ArlEstimate c = estimate_arl(det, 2.0, g, 200, 5000, 4, {1, {}});
  CHECK(c.mean != a.mean);
}

TEST_CASE("theoretical threshold keeps the ARL above gamma") {
  const AffineDetector det = l1_detector(3, 2.4);
  const double gamma = 100.0;
  const double b = threshold_from_gamma(gamma, det.epsilon_star);
  const ArlEstimate e = estimate_arl(det, b, Gaussian::standard(3), 1000, 20000, 8, {2, {}});
  CHECK(e.mean >= gamma - 3.0 * e.se);
}

TEST_CASE("detection delay on deterministic increments and monotonicity in b") {
  const Gaussian g = Gaussian::standard(2);
  const ChangeScenario sc{g, g, 1};
  const DelayEstimate up = estimate_wdd(constant(2, 1.0), 10.0, sc, 100, 1);
  CHECK(up.mean == 10.0);
  CHECK(up.sd == 0.0);
  CHECK(up.delays.size() == 100);

  const long d = 4;
  const AffineDetector det = l1_detector(d, 3.0);
  const ChangeScenario shift{Gaussian::standard(d), Gaussian(Vector::Constant(d, 0.4), Covariance::identity(d)), 1};
  std::vector<long> prev(200, 0);
  for (double b : {1.0, 2.0, 4.0, 8.0}) {
    const DelayEstimate e = estimate_wdd(det, b, shift, 200, 13);
    CHECK(e.censored_fraction == 0.0);
    for (std::size_t i = 0; i < prev.size(); ++i) {
      CHECK(e.delays[i] >= prev[i]);
      prev[i] = e.delays[i];
    }
  }
  CHECK_THROWS_AS(estimate_wdd(det, 1.0, shift, 50, 13), DomainError);
}

TEST_CASE("late changes record false alarms and censoring excludes runs") {
  const long d = 2;
  const Gaussian g = Gaussian::standard(d);
  const DelayEstimate e = estimate_wdd(constant(d, 1.0), 3.0, ChangeScenario{g, g, 10}, 100, 1);
  CHECK(e.false_alarm_fraction == 1.0);
  CHECK(std::all_of(e.delays.begin(), e.delays.end(), [](long x) { return x == -1; }));
  const DelayEstimate c = estimate_wdd(constant(d, -1.0), 3.0, ChangeScenario{g, g, 1}, 100, 1, {}, 50);
  CHECK(c.censored_fraction == 1.0);
  CHECK(std::isnan(c.mean));
  CHECK(c.horizon == 50);
}

TEST_CASE("delay from time 1 does not depend on the pre-change member") {
  const long d = 3;
  const AffineDetector det = l1_detector(d, 2.4);
  const Gaussian post(Vector::Constant(d, 0.5), Covariance::identity(d));
  const Gaussian pre_a = Gaussian::standard(d);
  const Gaussian pre_b(Vector::Constant(d, -0.3), Covariance::identity(d));
  const DelayEstimate a = estimate_wdd(det, 3.0, ChangeScenario{pre_a, post, 1}, 500, 4);
  const DelayEstimate b = estimate_wdd(det, 3.0, ChangeScenario{pre_b, post, 1}, 500, 5);
  CHECK(ks_distance(a.delays, b.delays) <= 0.15);
}

TEST_CASE("per-run post-change laws come from the truth substreams") {
  const long d = 2;
  const Gaussian pre = Gaussian::standard(d);
  int calls = 0;
  const GaussianSampler sampler = [&](SeededStream& s) {
    ++calls;
    return Gaussian(Vector::Constant(d, s.uniform(0.5, 1.0)), Covariance::identity(d));
  };
  const AffineDetector det = l1_detector(d, 1.6);
  const DelayEstimate a = estimate_wdd(det, 2.0, pre, sampler, 1, 150, 9, {3, {}});
  const DelayEstimate b = estimate_wdd(det, 2.0, pre, sampler, 1, 150, 9, {1, {}});
  CHECK(calls == 300);
  CHECK(a.delays == b.delays);
  CHECK(a.mean == b.mean);
}

TEST_CASE("affine bound audit uses the closed form") {
  const long d = 4;
  const AffineDetector det = l1_detector(d, 3.0);
  const Covariance id = Covariance::identity(d);
  const LfpSolution s = solve_lfp(VectorSet::singleton(Vector::Zero(d)), VectorSet::l1_ball(Vector::Ones(d), 3.0), id);
  const std::vector<Gaussian> p0 = {Gaussian(s.mu0_star, id), Gaussian(Vector(s.mu0_star + 0.5 * det.a), id)};
  const std::vector<Gaussian> p1 = {Gaussian(s.mu1_star, id), Gaussian(Vector::Ones(d), id)};
  const BoundReport r = verify_detector_bounds(det, p0, p1, 0, 1);
  REQUIRE(r.checks.size() == 4);
  CHECK(r.all_pass());
  CHECK(std::abs(r.checks[0].value - det.epsilon_star) < 1e-10);
  CHECK(r.checks[1].value < det.epsilon_star);
  // Moving the other way, toward M1, breaks the bound.
  CHECK(affine_moment_minus(det, Gaussian(Vector(s.mu0_star - 0.5 * det.a), id)) > det.epsilon_star);
  CHECK(std::abs(r.checks[2].value - det.epsilon_star) < 1e-10);
  CHECK(r.checks[0].closed_form);
  CHECK(r.checks[0].cls == 0);
  CHECK(r.checks[3].cls == 1);
  CHECK(r.checks[3].member == 1);
  AffineDetector bare = det;
  bare.epsilon_star = kNaN;
  CHECK_THROWS_AS(verify_detector_bounds(bare, p0, p1, 0, 1), DomainError);
}

TEST_CASE("Monte Carlo audit agrees with the quadratic closed form") {
  const long d = 3;
  const ClassSetup s0 = make_class_setup(MatrixSet::singleton(Matrix::Identity(d, d)), MeanLift::singleton(Vector::Zero(d)));
  const ClassSetup s1 = make_class_setup(MatrixSet::spectral_ball(d, 0.5), MeanLift::singleton(Vector::Zero(d)));
  const SaddleSolution sol = solve_saddle(s0, s1);
  const QuadraticDetector det = build_quadratic_detector(sol, s0, s1);
  SeededStream rng(51, 0);
  std::vector<Gaussian> p0{Gaussian::standard(d)}, p1;
  for (int k = 0; k < 5; ++k) p1.emplace_back(Vector::Zero(d), random_member(s1.U, rng));
  const BoundReport r = verify_detector_bounds(det, p0, p1, 100000, 3, {2, {}});
  CHECK(r.all_pass());
  CHECK(r.epsilon_star == sol.epsilon_star);
  const double closed = quadratic_mgf_minus(det, p0[0]);
  CHECK(std::abs(r.checks[0].value - closed) <= 4.0 * r.checks[0].se);
  CHECK(closed <= sol.epsilon_star + 1e-9);
  QuadraticDetector flipped = det;
  flipped.H = -det.H;
  flipped.h = -det.h;
  flipped.kappa_const = -det.kappa_const;
  for (std::size_t k = 0; k < p1.size(); ++k) {
    CHECK(std::abs(r.checks[k + 1].value - quadratic_mgf_minus(flipped, p1[k])) <= 4.0 * r.checks[k + 1].se + 1e-12);
  }
}

TEST_CASE("scenario models") {
  const ExperimentConfig cfg = parse_config(kSmallConfig);
  CHECK(scenario_seed(cfg, 0) == scenario_seed(cfg, 0));
  CHECK(scenario_seed(cfg, 0) != scenario_seed(cfg, 1));

  const ScenarioModel m = build_model(cfg.scenarios[0], cfg.dimension, scenario_seed(cfg, 0));
  CHECK(m.kind == "mean_shift");
  REQUIRE(m.lfp);
  CHECK(std::holds_alternative<AffineDetector>(m.robust));
  CHECK(epsilon_star(m.robust) == m.lfp->epsilon_star);
  CHECK(std::isnan(epsilon_star(m.baseline)));
  CHECK(same(m.nu0.mean(), m.lfp->mu0_star));
  CHECK(same(m.baseline_post.mean(), Vector::Ones(3)));
  SeededStream t(1, 0);
  const Gaussian truth = m.truth(t);
  CHECK(truth.mean().minCoeff() >= 0.3);
  CHECK(truth.mean().maxCoeff() <= 0.9);

  const ScenarioModel c = build_model(cfg.scenarios[2], cfg.dimension, scenario_seed(cfg, 2));
  REQUIRE(c.saddle);
  CHECK(std::holds_alternative<QuadraticDetector>(c.robust));
  CHECK(std::holds_alternative<QuadraticDetector>(c.baseline));
  CHECK(epsilon_star(c.robust) == c.saddle->epsilon_star);
  CHECK(contains(MatrixSet::spectral_ball(3, 0.4), c.baseline_post.covariance().matrix(), 1e-10));

  auto [p0, p1] = sample_members(cfg.scenarios[2], cfg.dimension, 10, 4);
  CHECK(p0.size() == 10);
  CHECK(p1.size() == 10);
  for (const Gaussian& g : p1) CHECK(contains(MatrixSet::spectral_ball(3, 0.4), g.covariance().matrix(), 1e-10));
  auto [q0, q1] = sample_members(cfg.scenarios[0], cfg.dimension, 5, 4);
  for (const Gaussian& g : q1) CHECK(contains(VectorSet::l1_ball(Vector::Ones(3), 2.0), g.mean(), 1e-10));
}

TEST_CASE("experiment rows are deterministic across thread counts") {
  const ExperimentConfig cfg = parse_config(kSmallConfig);
  ExperimentOptions one, many;
  one.threads = 1;
  many.threads = 6;
  std::vector<std::string> stages;
  many.stage = [&](const std::string& s) { stages.push_back(s); };
  const auto a = run_experiment(cfg, one);
  const auto b = run_experiment(cfg, many);
  REQUIRE(a.size() == 6);
  REQUIRE(b.size() == 6);
  CHECK_FALSE(stages.empty());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].scenario == b[i].scenario);
    CHECK(a[i].procedure == (i % 2 ? "baseline" : "robust"));
    CHECK(a[i].b == b[i].b);
    CHECK(a[i].arl.mean == b[i].arl.mean);
    CHECK(a[i].wdd.delays == b[i].wdd.delays);
    CHECK(a[i].trials == 100);
    CHECK(a[i].seed == 11);
    CHECK(std::isnan(a[i].efficiency_factor) == (a[i].procedure == "baseline"));
  }
  // A fixed post-change law gives the exact factor.
  const RunReport& fixed = a[2];
  const ScenarioModel m = build_model(cfg.scenarios[1], 3, scenario_seed(cfg, 1));
  SeededStream t(0, 0);
  const double kl = kl_divergence(m.nu0, m.truth(t));
  CHECK(fixed.efficiency_factor == doctest::Approx(kl / (2.0 * (1.0 - fixed.epsilon_star))).epsilon(1e-12));

  ExperimentOptions only;
  only.only_scenario = "cov";
  const auto c = run_experiment(cfg, only);
  REQUIRE(c.size() == 2);
  CHECK(c[0].scenario == "cov");
  CHECK(c[0].wdd.delays == a[4].wdd.delays);
  only.only_scenario = "nope";
  CHECK_THROWS_AS(run_experiment(cfg, only), ConfigError);
}

TEST_CASE("experiment errors carry the scenario name") {
  ExperimentConfig cfg = parse_config(kSmallConfig);
  cfg.scenarios.erase(cfg.scenarios.begin() + 1, cfg.scenarios.end());
  cfg.threshold_mode = ThresholdMode::calibrated;
  cfg.gamma = 1e9;  // unreachable within the horizon
  cfg.arl_horizon_factor = 1e-6;
  try {
    run_experiment(cfg);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("scenario 'mean'") != std::string::npos);
  }
}
