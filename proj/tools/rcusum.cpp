// rcusum: solve robust CUSUM detectors and evaluate them by simulation.

#include "rcusum/config.hpp"
#include "rcusum/cusum.hpp"
#include "rcusum/errors.hpp"
#include "rcusum/parallel.hpp"
#include "rcusum/report.hpp"
#include "rcusum/simulation.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

using namespace rcusum;
using Clock = std::chrono::steady_clock;

// Progress lines on stderr, at most one per second.
class Progress {
 public:
  explicit Progress(bool quiet) : quiet_(quiet), start_(Clock::now()), last_(start_) {}

  void stage(const std::string& s) {
    stage_ = s;
    maybe_print(true);
  }
  void tick() {
    ++runs_;
    maybe_print(false);
  }
  std::function<void()> ticker() {
    return [this] { tick(); };
  }

 private:
  void maybe_print(bool force_if_due) {
    if (quiet_) return;
    const auto now = Clock::now();
    if (now - last_ < std::chrono::seconds(1)) return;
    (void)force_if_due;
    last_ = now;
    const double elapsed = std::chrono::duration<double>(now - start_).count();
    std::cerr << "rcusum: " << stage_ << " (" << runs_ << " runs, " << static_cast<long>(elapsed) << " s)\n";
  }

  bool quiet_;
  Clock::time_point start_;
  Clock::time_point last_;
  std::string stage_ = "starting";
  long runs_ = 0;
};

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  int threads = default_threads();
  bool quiet = false;
  std::string scenario;
};

void add_common(CLI::App* sub, Common& c, bool needs_config = true) {
  auto* opt = sub->add_option("--config", c.config, "Experiment configuration (YAML)")->check(CLI::ExistingFile);
  if (needs_config) opt->required();
  sub->add_option("--seed", c.seed, "Override the configuration seed");
  sub->add_option("--out", c.out, "Write results to this file instead of standard output");
  sub->add_option("--format", c.format, "Output format")->check(CLI::IsMember({"csv", "human"}));
  sub->add_option("--threads", c.threads, "Worker threads (default: RCUSUM_THREADS or hardware concurrency)")
      ->check(CLI::PositiveNumber);
  sub->add_flag("--quiet", c.quiet, "Suppress progress messages");
  sub->add_option("--scenario", c.scenario, "Scenario name (default: first applicable)");
}

ExperimentConfig load(const Common& c) {
  ExperimentConfig cfg = load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

// Index of the named scenario, or of the first one of the given kind.
std::size_t pick(const ExperimentConfig& cfg, const std::string& name, const char* kind = nullptr) {
  if (!name.empty()) {
    const ScenarioConfig& sc = find_scenario(cfg, name);
    return static_cast<std::size_t>(&sc - cfg.scenarios.data());
  }
  for (std::size_t k = 0; k < cfg.scenarios.size(); ++k) {
    const bool mean = std::holds_alternative<MeanShiftSpec>(cfg.scenarios[k].spec);
    if (!kind || (std::string_view(kind) == "mean_shift") == mean) return k;
  }
  throw ConfigError({std::string("no ") + kind + " scenario in the configuration"});
}

std::string join_vector(const Vector& v) {
  std::string s;
  for (long i = 0; i < v.size(); ++i) s += (i ? ";" : "") + format_number(v(i));
  return s;
}

std::string join_matrix(const Matrix& m) {
  std::string s;
  for (long i = 0; i < m.rows(); ++i) s += (i ? "|" : "") + join_vector(m.row(i).transpose());
  return s;
}

// Key-value output: a two-line CSV or aligned "key  value" lines.
void emit_record(std::ostream& out, const std::string& format,
                 const std::vector<std::pair<std::string, std::string>>& fields) {
  if (format == "csv") {
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i].first;
    out << '\n';
    for (std::size_t i = 0; i < fields.size(); ++i) out << (i ? "," : "") << fields[i].second;
    out << '\n';
    return;
  }
  std::size_t w = 0;
  for (const auto& f : fields) w = std::max(w, f.first.size());
  for (const auto& f : fields) out << f.first << std::string(w - f.first.size() + 2, ' ') << f.second << '\n';
}

void emit_table(std::ostream& out, const std::string& format, const std::vector<std::string>& header,
                const std::vector<std::vector<std::string>>& rows) {
  if (format == "human") {
    write_aligned(out, header, rows);
    return;
  }
  for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
  out << '\n';
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) out << (i ? "," : "") << r[i];
    out << '\n';
  }
}

const Detector& choose(const ScenarioModel& m, const std::string& procedure) {
  return procedure == "baseline" ? m.baseline : m.robust;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust CUSUM change detection for multivariate Gaussian streams"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for every subcommand");

  Common c;
  std::string procedure = "robust";
  std::optional<double> b_opt;
  std::optional<double> gamma_opt;
  std::optional<long> trials_opt;
  std::optional<long> horizon_opt;
  long kappa = 1;
  long members = 20;
  long samples = 100000;
  std::optional<double> beta_opt;
  std::optional<double> gap_tol_opt;

  auto* lfp = app.add_subcommand("lfp", "Least-favorable mean pair and affine detector of a mean-shift scenario");
  add_common(lfp, c);

  auto* detector = app.add_subcommand("detector", "Quadratic detector of a covariance-shift scenario");
  add_common(detector, c);
  detector->add_option("--beta", beta_opt, "Feasible-set parameter in (0, 1)");
  detector->add_option("--gap-tol", gap_tol_opt, "Duality-gap tolerance")->check(CLI::PositiveNumber);

  auto* calibrate = app.add_subcommand("calibrate", "Monte Carlo threshold for a target ARL");
  add_common(calibrate, c);
  calibrate->add_option("--procedure", procedure, "robust or baseline")->check(CLI::IsMember({"robust", "baseline"}));
  calibrate->add_option("--gamma", gamma_opt, "Target ARL (default: configuration gamma)");
  calibrate->add_option("--trials", trials_opt, "Runs per ARL estimate (default: configuration)");

  auto* arl = app.add_subcommand("arl", "Average run length without change");
  add_common(arl, c);
  arl->add_option("--procedure", procedure, "robust or baseline")->check(CLI::IsMember({"robust", "baseline"}));
  arl->add_option("-b,--threshold", b_opt, "Threshold (default: the certified one, log gamma for the baseline)");
  arl->add_option("--trials", trials_opt, "Runs (default: configuration)");
  arl->add_option("--horizon", horizon_opt, "Censoring horizon (default: configured multiple of gamma)");

  auto* edd = app.add_subcommand("edd", "Detection delay after a change");
  add_common(edd, c);
  edd->add_option("--procedure", procedure, "robust or baseline")->check(CLI::IsMember({"robust", "baseline"}));
  edd->add_option("-b,--threshold", b_opt, "Threshold (default: the certified one, log gamma for the baseline)");
  edd->add_option("--trials", trials_opt, "Runs (default: configuration)");
  edd->add_option("--kappa", kappa, "Change time (1: change before the first observation)")->check(CLI::PositiveNumber);
  edd->add_option("--horizon", horizon_opt, "Censoring horizon after the change");

  auto* experiment = app.add_subcommand("experiment", "Robust versus baseline comparison over all scenarios");
  add_common(experiment, c);

  auto* verify = app.add_subcommand("verify", "Audit exponential-moment bounds on sampled class members");
  add_common(verify, c);
  verify->add_option("--members", members, "Members per class")->check(CLI::PositiveNumber);
  verify->add_option("--samples", samples, "Monte Carlo draws per member")->check(CLI::Range(2L, 1000000000L));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "rcusum: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  Progress progress(c.quiet);
  std::ostringstream out;
  try {
    const ExperimentConfig cfg = load(c);
    SimOptions sim{c.threads, progress.ticker()};

    if (lfp->parsed()) {
      const std::size_t k = pick(cfg, c.scenario, "mean_shift");
      const ScenarioConfig& sc = cfg.scenarios[k];
      const auto& m = std::get<MeanShiftSpec>(sc.spec);
      const LfpSolution s = solve_lfp(m.m0, m.m1, Covariance(m.covariance), m.solver);
      const AffineDetector det = build_affine_detector(s, Covariance(m.covariance));
      emit_record(out, c.format,
                  {{"scenario", sc.name},
                   {"delta_sq", format_number(s.delta_sq)},
                   {"epsilon_star", format_number(s.epsilon_star)},
                   {"iterations", std::to_string(s.iterations)},
                   {"residual", format_number(s.residual)},
                   {"degenerate_pair", s.degenerate_pair ? "true" : "false"},
                   {"c", format_number(det.c)},
                   {"mu0_star", join_vector(s.mu0_star)},
                   {"mu1_star", join_vector(s.mu1_star)},
                   {"a", join_vector(det.a)}});
    } else if (detector->parsed()) {
      const std::size_t k = pick(cfg, c.scenario, "covariance_shift");
      const ScenarioConfig& sc = cfg.scenarios[k];
      if (!std::holds_alternative<CovarianceShiftSpec>(sc.spec)) {
        throw ConfigError({"scenario '" + sc.name + "' is a mean shift; use the lfp subcommand"});
      }
      auto spec = std::get<CovarianceShiftSpec>(sc.spec);
      if (beta_opt) spec.solver.beta = *beta_opt;
      if (gap_tol_opt) spec.solver.gap_tol = *gap_tol_opt;
      const ClassSetup s0 = make_class_setup(spec.u0, MeanLift::singleton(spec.mean0));
      const ClassSetup s1 = make_class_setup(spec.u1, MeanLift::singleton(spec.mean1));
      progress.stage(sc.name + ": solving saddle problem");
      const SaddleSolution sol = solve_saddle(s0, s1, spec.solver);
      const QuadraticDetector det = build_quadratic_detector(sol, s0, s1);
      emit_record(out, c.format,
                  {{"scenario", sc.name},
                   {"sv", format_number(sol.sv)},
                   {"gap", format_number(sol.gap)},
                   {"epsilon_star", format_number(sol.epsilon_star)},
                   {"iterations", std::to_string(sol.iterations)},
                   {"delta0", format_number(s0.delta)},
                   {"delta1", format_number(s1.delta)},
                   {"kappa_const", format_number(det.kappa_const)},
                   {"h_star", join_vector(sol.h_star)},
                   {"H_star", join_matrix(sol.H_star)}});
    } else if (calibrate->parsed()) {
      const std::size_t k = pick(cfg, c.scenario);
      const ScenarioModel model = build_model(cfg.scenarios[k], cfg.dimension, scenario_seed(cfg, k));
      const double gamma = gamma_opt.value_or(cfg.gamma);
      const long trials = trials_opt.value_or(cfg.arl_trials);
      CalibrationOptions co;
      co.horizon_factor = cfg.arl_horizon_factor;
      co.threads = c.threads;
      co.tick = progress.ticker();
      progress.stage(model.name + ": calibrating " + procedure + " threshold");
      const Detector& det = choose(model, procedure);
      const CalibrationResult r =
          calibrate_threshold_mc(det, model.nu0, gamma, trials, derive_seed(model.seed, {1}), co);
      emit_record(out, c.format,
                  {{"scenario", model.name},
                   {"procedure", procedure},
                   {"gamma", format_number(gamma)},
                   {"b", format_number(r.b)},
                   {"b_reference", format_number(reference_threshold(det, gamma))},
                   {"arl_mean", format_number(r.arl)},
                   {"arl_se", format_number(r.arl_se)},
                   {"censored_fraction", format_number(r.censored_fraction)},
                   {"evaluations", std::to_string(r.evaluations)},
                   {"trials", std::to_string(trials)},
                   {"seed", std::to_string(cfg.seed)}});
    } else if (arl->parsed()) {
      const std::size_t k = pick(cfg, c.scenario);
      const ScenarioModel model = build_model(cfg.scenarios[k], cfg.dimension, scenario_seed(cfg, k));
      const Detector& det = choose(model, procedure);
      const double b = b_opt.value_or(reference_threshold(det, cfg.gamma));
      const long trials = trials_opt.value_or(cfg.arl_trials);
      const long horizon = horizon_opt.value_or(static_cast<long>(std::ceil(cfg.arl_horizon_factor * cfg.gamma)));
      if (horizon < 1) throw DomainError("--horizon must be at least 1");
      progress.stage(model.name + ": " + procedure + " ARL");
      const ArlEstimate e = estimate_arl(det, b, model.nu0, trials, horizon, derive_seed(model.seed, {1}), sim);
      emit_record(out, c.format,
                  {{"scenario", model.name},
                   {"procedure", procedure},
                   {"b", format_number(b)},
                   {"arl_mean", format_number(e.mean)},
                   {"arl_se", format_number(e.se)},
                   {"censored_fraction", format_number(e.censored_fraction)},
                   {"trials", std::to_string(e.trials)},
                   {"horizon", std::to_string(e.horizon)},
                   {"seed", std::to_string(cfg.seed)}});
    } else if (edd->parsed()) {
      const std::size_t k = pick(cfg, c.scenario);
      const ScenarioModel model = build_model(cfg.scenarios[k], cfg.dimension, scenario_seed(cfg, k));
      const Detector& det = choose(model, procedure);
      const double b = b_opt.value_or(reference_threshold(det, cfg.gamma));
      const long trials = trials_opt.value_or(cfg.delay_trials);
      const long horizon = horizon_opt.value_or(cfg.delay_horizon);
      if (horizon < 1) throw DomainError("--horizon must be at least 1");
      progress.stage(model.name + ": " + procedure + " detection delay");
      const DelayEstimate e =
          estimate_wdd(det, b, model.nu0, model.truth, kappa, trials, derive_seed(model.seed, {2}), sim, horizon);
      emit_record(out, c.format,
                  {{"scenario", model.name},
                   {"procedure", procedure},
                   {"b", format_number(b)},
                   {"kappa", std::to_string(kappa)},
                   {"wdd_mean", format_number(e.mean)},
                   {"wdd_sd", format_number(e.sd)},
                   {"censored_fraction", format_number(e.censored_fraction)},
                   {"false_alarm_fraction", format_number(e.false_alarm_fraction)},
                   {"trials", std::to_string(e.trials)},
                   {"horizon", std::to_string(e.horizon)},
                   {"seed", std::to_string(cfg.seed)}});
    } else if (experiment->parsed()) {
      ExperimentOptions eo;
      eo.threads = c.threads;
      eo.tick = progress.ticker();
      eo.stage = [&](const std::string& s) { progress.stage(s); };
      if (!c.scenario.empty()) eo.only_scenario = c.scenario;
      const std::vector<RunReport> rows = run_experiment(cfg, eo);
      c.format == "csv" ? write_csv(out, rows) : write_human(out, rows);
    } else if (verify->parsed()) {
      const std::size_t k = pick(cfg, c.scenario);
      const ScenarioConfig& sc = cfg.scenarios[k];
      const std::uint64_t seed = scenario_seed(cfg, k);
      const ScenarioModel model = build_model(sc, cfg.dimension, seed);
      auto [p0, p1] = sample_members(sc, cfg.dimension, members, derive_seed(seed, {3}));
      progress.stage(sc.name + ": auditing moment bounds");
      const BoundReport rep = verify_detector_bounds(model.robust, p0, p1, samples, derive_seed(seed, {4}), sim);
      std::vector<std::vector<std::string>> rows;
      for (const MomentCheck& m : rep.checks) {
        rows.push_back({sc.name, m.cls == 0 ? "pre" : "post", std::to_string(m.member), format_number(m.value),
                        format_number(m.se), format_number(rep.epsilon_star), m.closed_form ? "closed_form" : "monte_carlo",
                        m.pass ? "pass" : "fail"});
      }
      emit_table(out, c.format, {"scenario", "class", "member", "moment", "se", "epsilon_star", "method", "result"},
                 rows);
      if (!c.quiet) {
        std::cerr << "rcusum: " << (rep.all_pass() ? "all moment bounds hold" : "some moment bounds FAILED") << '\n';
      }
    }
  } catch (const ConvergenceError& e) {
    std::cerr << "rcusum: solver did not converge: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rcusum: " << e.what() << '\n';
    return 1;
  }

  if (c.out.empty()) {
    std::cout << out.str();
    std::cout.flush();
  } else {
    std::ofstream f(c.out, std::ios::binary);
    if (!f) {
      std::cerr << "rcusum: cannot write " << c.out << '\n';
      return 1;
    }
    f << out.str();
  }
  return 0;
}
