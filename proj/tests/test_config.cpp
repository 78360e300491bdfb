#include "rcusum/config.hpp"
#include "rcusum/errors.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <string>

using namespace rcusum;

namespace {

const std::string kBase = R"(
dimension: 3
gamma: 200
seed: 5
threshold_mode: calibrated
trials: {arl: 100, delay: 150}
scenarios:
  - name: m
    kind: mean_shift
    covariance: {identity: 2, diagonal: [0, 1, 0]}
    M0: {box: {lower: -1, upper: [0, 0.5, 1]}}
    M1: {l2_ball: {center: [1, 2, 3], radius_squared: 4}}
    truth: {uniform_box: {low: 0.1, high: 0.5}}
    baseline: {pre_mean: 0, post_mean: 1}
    solver: {tol: 1e-10, max_iters: 5000}
  - name: c
    kind: covariance_shift
    mean0: 0
    mean1: [0.1, 0, 0]
    U0: {singleton: {rows: [[1, 0, 0], [0, 1, 0], [0, 0, 1]]}}
    U1:
      interval:
        base: {identity: 1}
        direction: {sqexp_offdiag: {scale: 1, length: 1}}
        low: 0.5
        high: 1
    truth: random_member
    baseline: {pre_covariance: {identity: 1}, post_covariance: {identity: 1, sqexp_offdiag: {scale: 0.75, length: 1}}}
    solver: {beta: 0.95, gap_tol: 1e-5, max_iters: 3000}
)";

std::vector<std::string> violations(const std::string& text) {
  try {
    parse_config(text);
  } catch (const ConfigError& e) {
    return e.violations();
  }
  return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("bundled configurations parse") {
  const ExperimentConfig full = load_config(RCUSUM_CONFIG_DIR "/table1_paper.cfg");
  CHECK(full.dimension == 30);
  CHECK(full.gamma == 5000.0);
  CHECK(full.scenarios.size() == 4);
  const ExperimentConfig desk = load_config(RCUSUM_CONFIG_DIR "/table1_desk.cfg");
  CHECK(desk.dimension == 10);
  CHECK(desk.gamma == 500.0);
  CHECK(desk.delay_trials == 200);
  CHECK(desk.threshold_mode == ThresholdMode::calibrated);
  const ExperimentConfig l1 = load_config(RCUSUM_CONFIG_DIR "/l1_mean.cfg");
  CHECK(l1.scenarios.size() == 1);
  CHECK_THROWS_AS(load_config(RCUSUM_CONFIG_DIR "/missing.cfg"), ConfigError);
}

TEST_CASE("parsed values") {
  const ExperimentConfig cfg = parse_config(kBase);
  CHECK(cfg.seed == 5);
  CHECK(cfg.arl_trials == 100);
  CHECK(cfg.delay_trials == 150);
  CHECK(cfg.arl_horizon_factor == 50.0);
  CHECK(cfg.delay_horizon == 10000);
  const auto& m = std::get<MeanShiftSpec>(cfg.scenarios[0].spec);
  CHECK(m.covariance(1, 1) == 3.0);
  CHECK(m.covariance(0, 0) == 2.0);
  const auto& ball = std::get<L2Ball>(m.m1.variant());
  CHECK(ball.radius == 2.0);
  CHECK(ball.center(2) == 3.0);
  const auto& box = std::get<BoxSet>(m.m0.variant());
  CHECK(box.lower(1) == -1.0);
  CHECK(box.upper(1) == 0.5);
  CHECK(m.solver.tol == 1e-10);
  CHECK(m.solver.max_iters == 5000);
  const auto& c = std::get<CovarianceShiftSpec>(cfg.scenarios[1].spec);
  const auto& iv = std::get<IntervalSet>(c.u1.variant());
  CHECK(iv.direction(0, 0) == 0.0);
  CHECK(iv.direction(0, 1) == doctest::Approx(std::exp(-1.0)));
  CHECK(iv.direction(0, 2) == doctest::Approx(std::exp(-4.0)));
  REQUIRE(c.baseline_post_covariance);
  CHECK((*c.baseline_post_covariance)(1, 0) == doctest::Approx(0.75 * std::exp(-1.0)));
  CHECK(c.solver.beta == 0.95);
  CHECK(c.solver.gap_tol == 1e-5);
  CHECK(&find_scenario(cfg, "c") == &cfg.scenarios[1]);
  CHECK_THROWS_AS(find_scenario(cfg, "zzz"), ConfigError);
}

TEST_CASE("serialization round-trips") {
  for (const std::string& text :
       {kBase, std::string("dimension: 2\ngamma: 10\nseed: 18446744073709551615\nthreshold_mode: theoretical\n"
                           "trials: {arl: 100, delay: 100}\nhorizon: {arl_factor: 7.5, delay: 33}\nscenarios:\n"
                           "  - {name: s, kind: covariance_shift, mean0: 0, mean1: 0, U0: {singleton: {identity: 1}},\n"
                           "     U1: {spectral_ball: {radius: 0.3}}, truth: random_member,\n"
                           "     baseline: {pre_covariance: {identity: 1}, post_covariance: random_member}}\n")}) {
    const ExperimentConfig a = parse_config(text);
    const std::string once = serialize_config(a);
    const ExperimentConfig b = parse_config(once);
    CHECK(a == b);
    CHECK(serialize_config(b) == once);
  }
  for (const char* name : {"table1_paper.cfg", "table1_desk.cfg", "l1_mean.cfg"}) {
    const ExperimentConfig a = load_config(std::string(RCUSUM_CONFIG_DIR "/") + name);
    CHECK(parse_config(serialize_config(a)) == a);
  }
}

TEST_CASE("empty document lists required fields") {
  const auto v = violations("");
  for (const char* key : {"dimension", "gamma", "seed", "threshold_mode", "trials", "scenarios"}) {
    CAPTURE(key);
    CHECK(mentions(v, key));
  }
}

TEST_CASE("beta must lie strictly inside (0, 1)") {
  CHECK(mentions(violations(replace(kBase, "beta: 0.95", "beta: 1.0")), "beta"));
  CHECK(mentions(violations(replace(kBase, "beta: 0.95", "beta: 0")), "beta"));
}

TEST_CASE("unknown keys are rejected") {
  CHECK(mentions(violations(replace(kBase, "gamma: 200", "gama: 200")), "gama"));
  CHECK(mentions(violations(replace(kBase, "radius_squared: 4", "radius_sqared: 4")), "radius_sqared"));
  CHECK(mentions(violations(replace(kBase, "gap_tol:", "gap_tolerance:")), "gap_tolerance"));
}

TEST_CASE("every violation is reported") {
  std::string text = replace(kBase, "gamma: 200", "gamma: 1");
  text = replace(text, "arl: 100", "arl: 99");
  text = replace(text, "center: [1, 2, 3]", "center: [1, 2]");
  text = replace(text, "low: 0.5", "low: 2");
  const auto v = violations(text);
  CHECK(v.size() >= 4);
  CHECK(mentions(v, "gamma"));
  CHECK(mentions(v, "trials.arl"));
  CHECK(mentions(v, "center"));
  CHECK(mentions(v, "low"));
}

TEST_CASE("field validation") {
  CHECK(mentions(violations(replace(kBase, "dimension: 3", "dimension: 0")), "dimension"));
  CHECK(mentions(violations(replace(kBase, "threshold_mode: calibrated", "threshold_mode: guess")), "threshold_mode"));
  CHECK(mentions(violations(replace(kBase, "name: c", "name: m")), "name"));
  CHECK(mentions(violations(replace(kBase, "kind: mean_shift", "kind: variance")), "kind"));
  CHECK(mentions(violations(replace(kBase, "seed: 5", "seed: -5")), "seed"));
  CHECK(mentions(violations(replace(kBase, "identity: 2, diagonal: [0, 1, 0]", "identity: -1")), "covariance"));
  CHECK(mentions(violations(replace(kBase, "truth: random_member", "truth: {uniform_box: {low: 0, high: 1}}")), "truth"));
  CHECK(mentions(violations(replace(kBase, "delay: 150", "delay: 150.5")), "delay"));
  CHECK(mentions(violations("dimension: [1\n"), "yaml"));
}
