#pragma once

#include "rcusum/config.hpp"
#include "rcusum/cusum.hpp"
#include "rcusum/detector.hpp"
#include "rcusum/gaussian.hpp"
#include "rcusum/lfp.hpp"
#include "rcusum/quadratic.hpp"

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace rcusum {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct SimOptions {
  int threads = 1;
  std::function<void()> tick;  // once per completed run, under a lock
};

struct ArlEstimate {
  double mean = 0.0;
  double se = 0.0;
  double censored_fraction = 0.0;  // censored runs are counted at the horizon
  long trials = 0;
  long horizon = 0;
};

struct DelayEstimate {
  double mean = kNaN;  // over runs that alarmed within the horizon
  double sd = kNaN;
  double censored_fraction = 0.0;
  double false_alarm_fraction = 0.0;  // alarms before the change (kappa > 1 only)
  long trials = 0;
  long horizon = 0;
  std::vector<long> delays;  // per run; -1 when censored or a false alarm
};

// Pre- and post-change laws with the change at time kappa (the first
// post-change observation).
struct ChangeScenario {
  Gaussian nu0_true;
  Gaussian nu1_true;
  long kappa = 1;
};

// Draws one post-change law per run.
using GaussianSampler = std::function<Gaussian(SeededStream&)>;

// Mean alarm time over no-change runs; run i uses substream (arl, i).
ArlEstimate estimate_arl(const Detector& det, double b, const Gaussian& nu0, long trials, long horizon,
                         std::uint64_t seed, const SimOptions& opts = {});

// Detection delay with the statistic at 0 when the change occurs.  The
// delay of an alarm at time T is T - kappa + 1.  Run i draws its
// observations from substream (delay, i).
DelayEstimate estimate_wdd(const Detector& det, double b, const ChangeScenario& scenario, long trials,
                           std::uint64_t seed, const SimOptions& opts = {}, long horizon = 10000);
// Same, with run i's post-change law drawn from substream (truth, i).
DelayEstimate estimate_wdd(const Detector& det, double b, const Gaussian& nu0, const GaussianSampler& post,
                           long kappa, long trials, std::uint64_t seed, const SimOptions& opts = {},
                           long horizon = 10000);

struct MomentCheck {
  int cls = 0;        // 0: E[exp(-phi)] under a pre-change member, 1: E[exp(phi)] post-change
  long member = 0;
  double value = 0.0;
  double se = 0.0;    // 0 for closed forms
  bool closed_form = false;
  bool pass = false;
};

struct BoundReport {
  double epsilon_star = kNaN;
  std::vector<MomentCheck> checks;
  bool all_pass() const;
};

// Checks both exponential moments against epsilon*: closed form for affine
// detectors (pass at epsilon* within 1e-10 relative), Monte Carlo with
// `samples` draws otherwise (pass at epsilon* + 3 se).
BoundReport verify_detector_bounds(const Detector& det, const std::vector<Gaussian>& p0,
                                   const std::vector<Gaussian>& p1, long samples, std::uint64_t seed,
                                   const SimOptions& opts = {});

// Detectors and laws derived from one configured scenario.
struct ScenarioModel {
  std::string name;
  std::string kind;  // mean_shift | covariance_shift
  long dim = 0;
  std::optional<LfpSolution> lfp;
  std::optional<SaddleSolution> saddle;
  std::optional<ClassSetup> setup0;
  std::optional<ClassSetup> setup1;
  Detector robust;
  Detector baseline;
  Gaussian nu0;             // pre-change law driving ARL runs
  Gaussian baseline_post;   // post-change law assumed by the baseline
  GaussianSampler truth;    // per-run post-change law
  std::uint64_t seed = 0;   // scenario seed derived from the experiment seed
};

std::uint64_t scenario_seed(const ExperimentConfig& cfg, std::size_t scenario_index);

// Solves the scenario's detector; throws ConvergenceError from the solvers.
ScenarioModel build_model(const ScenarioConfig& sc, long d, std::uint64_t seed);

// Members of the scenario's classes for bound audits: `count` random
// members each of P0 and P1 (means and covariances from the sets).
std::pair<std::vector<Gaussian>, std::vector<Gaussian>> sample_members(const ScenarioConfig& sc, long d, long count,
                                                                       std::uint64_t seed);

struct RunReport {
  std::string scenario;
  std::string procedure;  // robust | baseline
  long d = 0;
  double gamma = 0.0;
  double b = 0.0;
  double epsilon_star = kNaN;
  ArlEstimate arl;
  DelayEstimate wdd;
  long trials = 0;  // delay runs
  std::uint64_t seed = 0;
  // Mean over runs of KL(nu0 || nu1) / (2 (1 - epsilon*)); NaN for the baseline.
  double efficiency_factor = kNaN;
};

struct ExperimentOptions {
  int threads = 1;
  std::function<void()> tick;
  std::function<void(const std::string&)> stage;  // coarse progress messages
  std::optional<std::string> only_scenario;
};

// Every (or the selected) scenario: robust and baseline rows, in order.
std::vector<RunReport> run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opts = {});

}  // namespace rcusum
