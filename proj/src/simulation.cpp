#include "rcusum/simulation.hpp"

#include "rcusum/errors.hpp"
#include "rcusum/parallel.hpp"

#include <cmath>
#include <sstream>

namespace rcusum {

namespace {

constexpr std::uint64_t kSecondClass = std::uint64_t{1} << 40;

void require_trials(long trials, const char* what) {
  if (trials < 100) throw DomainError(std::string(what) + ": at least 100 trials are required");
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

DelayEstimate summarize_delays(std::vector<long> delays, long alarms_before_change, long horizon) {
  DelayEstimate est;
  est.trials = static_cast<long>(delays.size());
  est.horizon = horizon;
  double sum = 0.0, sq = 0.0;
  long n = 0, censored = 0;
  for (long v : delays) {
    if (v >= 0) {
      sum += static_cast<double>(v);
      sq += static_cast<double>(v) * static_cast<double>(v);
      ++n;
    }
  }
  censored = est.trials - n - alarms_before_change;
  if (n > 0) {
    est.mean = sum / static_cast<double>(n);
    est.sd = n > 1 ? std::sqrt(std::max(0.0, (sq - static_cast<double>(n) * est.mean * est.mean) / (n - 1.0))) : 0.0;
  }
  est.censored_fraction = static_cast<double>(censored) / static_cast<double>(est.trials);
  est.false_alarm_fraction = static_cast<double>(alarms_before_change) / static_cast<double>(est.trials);
  est.delays = std::move(delays);
  return est;
}

Gaussian gaussian_with_fallback(const Vector& mean, const Matrix& preferred, const Matrix& fallback) {
  try {
    return Gaussian(mean, preferred);
  } catch (const DomainError&) {
    return Gaussian(mean, fallback);
  }
}

}  // namespace

ArlEstimate estimate_arl(const Detector& det, double b, const Gaussian& nu0, long trials, long horizon,
                         std::uint64_t seed, const SimOptions& opts) {
  require_trials(trials, "estimate_arl");
  const std::vector<StoppingResult> runs = simulate_no_change(det, b, nu0, trials, horizon, seed, opts.threads, opts.tick);
  ArlEstimate est;
  est.trials = trials;
  est.horizon = horizon;
  double sum = 0.0, sq = 0.0, cens = 0.0;
  for (const auto& r : runs) {
    const double t = static_cast<double>(r.alarm_time);
    sum += t;
    sq += t * t;
    cens += r.censored ? 1.0 : 0.0;
  }
  const double n = static_cast<double>(trials);
  est.mean = sum / n;
  est.se = std::sqrt(std::max(0.0, (sq - n * est.mean * est.mean) / (n - 1.0)) / n);
  est.censored_fraction = cens / n;
  return est;
}

DelayEstimate estimate_wdd(const Detector& det, double b, const Gaussian& nu0, const GaussianSampler& post,
                           long kappa, long trials, std::uint64_t seed, const SimOptions& opts, long horizon) {
  require_trials(trials, "estimate_wdd");
  if (kappa < 1) throw DomainError("estimate_wdd: change time must be at least 1");
  std::vector<long> delays(static_cast<std::size_t>(trials), -1);
  std::vector<char> early(static_cast<std::size_t>(trials), 0);
  const long total = horizon + kappa - 1;
  parallel_for(
      trials, opts.threads,
      [&](long i) {
        SeededStream truth(seed, stream_id(StreamDomain::truth, static_cast<std::uint64_t>(i)));
        const Gaussian nu1 = post(truth);
        ChangeSource src(nu0, nu1, kappa, seed, stream_id(StreamDomain::delay, static_cast<std::uint64_t>(i)));
        const StoppingResult r = run_until_alarm(det, src, b, total);
        if (r.censored) return;
        if (r.alarm_time < kappa) {
          early[static_cast<std::size_t>(i)] = 1;
          return;
        }
        delays[static_cast<std::size_t>(i)] = r.alarm_time - kappa + 1;
      },
      opts.tick);
  long n_early = 0;
  for (char e : early) n_early += e;
  return summarize_delays(std::move(delays), n_early, horizon);
}

DelayEstimate estimate_wdd(const Detector& det, double b, const ChangeScenario& scenario, long trials,
                           std::uint64_t seed, const SimOptions& opts, long horizon) {
  const Gaussian& nu1 = scenario.nu1_true;
  return estimate_wdd(det, b, scenario.nu0_true, [&](SeededStream&) { return nu1; }, scenario.kappa, trials, seed,
                      opts, horizon);
}

bool BoundReport::all_pass() const {
  for (const auto& c : checks) {
    if (!c.pass) return false;
  }
  return true;
}

BoundReport verify_detector_bounds(const Detector& det, const std::vector<Gaussian>& p0,
                                   const std::vector<Gaussian>& p1, long samples, std::uint64_t seed,
                                   const SimOptions& opts) {
  BoundReport report;
  report.epsilon_star = epsilon_star(det);
  if (std::isnan(report.epsilon_star)) {
    throw DomainError("verify_detector_bounds: detector carries no epsilon* certificate");
  }
  const long d = dimension(det);
  const long n0 = static_cast<long>(p0.size());
  const long n = n0 + static_cast<long>(p1.size());
  for (const auto& g : p0) check_length(g.mean(), d, "verify_detector_bounds: P0 member");
  for (const auto& g : p1) check_length(g.mean(), d, "verify_detector_bounds: P1 member");
  const auto* affine = std::get_if<AffineDetector>(&det);
  if (!affine && samples < 2) throw DomainError("verify_detector_bounds: at least 2 samples are required");

  report.checks.resize(static_cast<std::size_t>(n));
  const double eps = report.epsilon_star;
  parallel_for(
      n, opts.threads,
      [&](long k) {
        MomentCheck c;
        c.cls = k < n0 ? 0 : 1;
        c.member = c.cls == 0 ? k : k - n0;
        const Gaussian& g = c.cls == 0 ? p0[static_cast<std::size_t>(c.member)] : p1[static_cast<std::size_t>(c.member)];
        const double sign = c.cls == 0 ? -1.0 : 1.0;
        if (affine) {
          c.closed_form = true;
          c.value = c.cls == 0 ? affine_moment_minus(*affine, g) : affine_moment_plus(*affine, g);
          c.pass = c.value <= eps * (1.0 + 1e-10);
        } else {
          SeededStream stream(seed, stream_id(StreamDomain::verify,
                                              static_cast<std::uint64_t>(c.member) + (c.cls == 0 ? 0 : kSecondClass)));
          Vector xi(d), scratch(d);
          double sum = 0.0, sq = 0.0;
          for (long s = 0; s < samples; ++s) {
            g.draw(stream, xi, scratch);
            const double v = std::exp(sign * evaluate(det, xi));
            sum += v;
            sq += v * v;
          }
          const double m = static_cast<double>(samples);
          c.value = sum / m;
          c.se = std::sqrt(std::max(0.0, (sq - m * c.value * c.value) / (m - 1.0)) / m);
          c.pass = c.value <= eps + 3.0 * c.se;
        }
        report.checks[static_cast<std::size_t>(k)] = c;
      },
      opts.tick);
  return report;
}

std::uint64_t scenario_seed(const ExperimentConfig& cfg, std::size_t scenario_index) {
  return derive_seed(cfg.seed, {static_cast<std::uint64_t>(scenario_index)});
}

ScenarioModel build_model(const ScenarioConfig& sc, long d, std::uint64_t seed) {
  return std::visit(
      overloaded{
          [&](const MeanShiftSpec& m) {
            const Covariance sigma(m.covariance);
            LfpSolution lfp = solve_lfp(m.m0, m.m1, sigma, m.solver);
            AffineDetector robust = build_affine_detector(lfp, sigma);
            const Gaussian pre(m.baseline_pre_mean, sigma);
            const Gaussian post(m.baseline_post_mean, sigma);
            AffineDetector baseline = likelihood_ratio_affine(pre, post);
            GaussianSampler truth;
            if (const auto* ub = std::get_if<UniformBoxTruth>(&m.truth)) {
              const double lo = ub->low, hi = ub->high;
              truth = [sigma, lo, hi, d](SeededStream& s) {
                Vector mu(d);
                for (long i = 0; i < d; ++i) mu(i) = s.uniform(lo, hi);
                return Gaussian(std::move(mu), sigma);
              };
            } else {
              const VectorSet m1 = m.m1;
              truth = [sigma, m1](SeededStream& s) { return Gaussian(random_member(m1, s), sigma); };
            }
            Gaussian nu0(lfp.mu0_star, sigma);
            return ScenarioModel{sc.name,
                                 "mean_shift",
                                 d,
                                 std::move(lfp),
                                 std::nullopt,
                                 std::nullopt,
                                 std::nullopt,
                                 std::move(robust),
                                 std::move(baseline),
                                 std::move(nu0),
                                 post,
                                 std::move(truth),
                                 seed};
          },
          [&](const CovarianceShiftSpec& c) {
            ClassSetup s0 = make_class_setup(c.u0, MeanLift::singleton(c.mean0));
            ClassSetup s1 = make_class_setup(c.u1, MeanLift::singleton(c.mean1));
            SaddleSolution sol = solve_saddle(s0, s1, c.solver);
            QuadraticDetector robust = build_quadratic_detector(sol, s0, s1);
            Matrix post_cov;
            if (c.baseline_post_covariance) {
              post_cov = *c.baseline_post_covariance;
            } else {
              SeededStream stream(seed, stream_id(StreamDomain::baseline, 0));
              post_cov = random_member(c.u1, stream);
            }
            const Gaussian pre(c.mean0, c.baseline_pre_covariance);
            const Gaussian post(c.mean1, post_cov);
            QuadraticDetector baseline = likelihood_ratio_quadratic(pre, post);
            const MatrixSet u1 = c.u1;
            const Vector mean1 = c.mean1;
            GaussianSampler truth = [u1, mean1](SeededStream& s) { return Gaussian(mean1, random_member(u1, s)); };
            Gaussian nu0 = gaussian_with_fallback(c.mean0, sol.theta0_star, s0.theta_star);
            return ScenarioModel{sc.name,
                                 "covariance_shift",
                                 d,
                                 std::nullopt,
                                 std::move(sol),
                                 std::move(s0),
                                 std::move(s1),
                                 std::move(robust),
                                 std::move(baseline),
                                 std::move(nu0),
                                 post,
                                 std::move(truth),
                                 seed};
          },
      },
      sc.spec);
}

std::pair<std::vector<Gaussian>, std::vector<Gaussian>> sample_members(const ScenarioConfig& sc, long d, long count,
                                                                       std::uint64_t seed) {
  (void)d;
  std::vector<Gaussian> p0, p1;
  for (long k = 0; k < count; ++k) {
    SeededStream s0(seed, stream_id(StreamDomain::member, static_cast<std::uint64_t>(k)));
    SeededStream s1(seed, stream_id(StreamDomain::member, static_cast<std::uint64_t>(k) + kSecondClass));
    std::visit(overloaded{
                   [&](const MeanShiftSpec& m) {
                     const Covariance sigma(m.covariance);
                     p0.emplace_back(random_member(m.m0, s0), sigma);
                     p1.emplace_back(random_member(m.m1, s1), sigma);
                   },
                   [&](const CovarianceShiftSpec& c) {
                     p0.emplace_back(c.mean0, random_member(c.u0, s0));
                     p1.emplace_back(c.mean1, random_member(c.u1, s1));
                   },
               },
               sc.spec);
  }
  return {std::move(p0), std::move(p1)};
}

std::vector<RunReport> run_experiment(const ExperimentConfig& cfg, const ExperimentOptions& opts) {
  std::vector<RunReport> rows;
  const SimOptions sim{opts.threads, opts.tick};
  const long horizon = static_cast<long>(std::ceil(cfg.arl_horizon_factor * cfg.gamma));
  bool matched = !opts.only_scenario;
  for (std::size_t k = 0; k < cfg.scenarios.size(); ++k) {
    const ScenarioConfig& sc = cfg.scenarios[k];
    if (opts.only_scenario && sc.name != *opts.only_scenario) continue;
    matched = true;
    try {
      const std::uint64_t seed = scenario_seed(cfg, k);
      const std::uint64_t arl_seed = derive_seed(seed, {1});
      const std::uint64_t delay_seed = derive_seed(seed, {2});
      if (opts.stage) opts.stage(sc.name + ": solving detector");
      const ScenarioModel model = build_model(sc, cfg.dimension, seed);

      for (const char* procedure : {"robust", "baseline"}) {
        const bool robust = std::string_view(procedure) == "robust";
        const Detector& det = robust ? model.robust : model.baseline;
        RunReport row;
        row.scenario = sc.name;
        row.procedure = procedure;
        row.d = cfg.dimension;
        row.gamma = cfg.gamma;
        row.epsilon_star = epsilon_star(det);
        row.trials = cfg.delay_trials;
        row.seed = cfg.seed;
        if (cfg.threshold_mode == ThresholdMode::calibrated) {
          if (opts.stage) opts.stage(sc.name + ": calibrating " + procedure + " threshold");
          CalibrationOptions co;
          co.horizon_factor = cfg.arl_horizon_factor;
          co.threads = opts.threads;
          co.tick = opts.tick;
          const CalibrationResult cal = calibrate_threshold_mc(det, model.nu0, cfg.gamma, cfg.arl_trials, arl_seed, co);
          row.b = cal.b;
          row.arl = ArlEstimate{cal.arl, cal.arl_se, cal.censored_fraction, cfg.arl_trials, horizon};
        } else {
          row.b = reference_threshold(det, cfg.gamma);
          if (opts.stage) opts.stage(sc.name + ": " + procedure + " ARL");
          row.arl = estimate_arl(det, row.b, model.nu0, cfg.arl_trials, horizon, arl_seed, sim);
        }
        if (opts.stage) opts.stage(sc.name + ": " + procedure + " detection delay");
        row.wdd = estimate_wdd(det, row.b, model.nu0, model.truth, 1, cfg.delay_trials, delay_seed, sim,
                               cfg.delay_horizon);
        if (robust) {
          double sum = 0.0;
          for (long i = 0; i < cfg.delay_trials; ++i) {
            SeededStream truth(delay_seed, stream_id(StreamDomain::truth, static_cast<std::uint64_t>(i)));
            sum += kl_divergence(model.nu0, model.truth(truth));
          }
          row.efficiency_factor = sum / static_cast<double>(cfg.delay_trials) / (2.0 * (1.0 - row.epsilon_star));
        }
        rows.push_back(std::move(row));
      }
    } catch (const ConvergenceError& e) {
      throw ConvergenceError("scenario '" + sc.name + "': " + e.what(), e.residual());
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& e) {
      throw Error("scenario '" + sc.name + "': " + e.what());
    }
  }
  if (!matched) find_scenario(cfg, *opts.only_scenario);
  return rows;
}

}  // namespace rcusum
