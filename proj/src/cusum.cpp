#include "rcusum/cusum.hpp"

#include "rcusum/errors.hpp"
#include "rcusum/parallel.hpp"

#include <cmath>
#include <sstream>

namespace rcusum {

CusumState step(CusumState state, double increment) {
  if (state.alarmed) throw Error("cusum step: state has already alarmed");
  state.statistic = std::max(state.statistic, 0.0) + increment;
  ++state.time;
  if (state.statistic >= state.threshold) state.alarmed = true;
  return state;
}

double threshold_from_gamma(double gamma, double epsilon_star) {
  if (!(gamma > 1.0)) throw DomainError("threshold_from_gamma: gamma must exceed 1");
  if (!(epsilon_star > 0.0 && epsilon_star < 1.0)) {
    throw DomainError("threshold_from_gamma: epsilon* must lie in (0, 1); epsilon* = 1 means the change is undetectable");
  }
  return std::log(gamma) + std::log(epsilon_star / (1.0 - epsilon_star));
}

double reference_threshold(const Detector& det, double gamma) {
  const double eps = epsilon_star(det);
  if (std::isnan(eps)) {
    if (!(gamma > 1.0)) throw DomainError("reference_threshold: gamma must exceed 1");
    return std::log(gamma);
  }
  return threshold_from_gamma(gamma, eps);
}

GaussianSource::GaussianSource(const Gaussian& g, std::uint64_t seed, std::uint64_t stream_id)
    : g_(&g), stream_(seed, stream_id), scratch_(g.dim()) {}

bool GaussianSource::next(Eigen::Ref<Vector> out) {
  g_->draw(stream_, out, scratch_);
  return true;
}

ChangeSource::ChangeSource(const Gaussian& pre, const Gaussian& post, long kappa, std::uint64_t seed,
                           std::uint64_t stream_id)
    : pre_(&pre), post_(&post), kappa_(kappa), stream_(seed, stream_id), scratch_(post.dim()) {
  if (pre.dim() != post.dim()) throw DimensionError("ChangeSource: post-change law", pre.dim(), post.dim());
  if (kappa < 1) throw DomainError("ChangeSource: change time must be at least 1");
}

bool ChangeSource::next(Eigen::Ref<Vector> out) {
  ++t_;
  (t_ < kappa_ ? pre_ : post_)->draw(stream_, out, scratch_);
  return true;
}

bool MatrixSource::next(Eigen::Ref<Vector> out) {
  if (pos_ >= rows_.rows()) return false;
  out = rows_.row(pos_++).transpose();
  return true;
}

StoppingResult run_until_alarm(const Detector& det, ObservationSource& source, double b, long horizon) {
  if (horizon < 1) throw DomainError("run_until_alarm: horizon must be at least 1");
  const long d = dimension(det);
  if (source.dim() != d) throw DimensionError("run_until_alarm: observation source", d, source.dim());
  Vector xi(d);
  CusumState state(b);
  while (state.time < horizon) {
    if (!source.next(xi)) {
      std::ostringstream msg;
      msg << "run_until_alarm: observation source exhausted after " << state.time << " of " << horizon
          << " observations";
      throw Error(msg.str());
    }
    state = step(state, increment(det, xi));
    if (state.alarmed) break;
  }
  StoppingResult r;
  r.alarm_time = state.time;
  r.censored = !state.alarmed;
  r.final_statistic = state.statistic;
  r.increments_consumed = state.time;
  return r;
}

std::vector<StoppingResult> simulate_no_change(const Detector& det, double b, const Gaussian& nu0, long trials,
                                               long horizon, std::uint64_t seed, int threads,
                                               const std::function<void()>& tick) {
  std::vector<StoppingResult> out(static_cast<std::size_t>(std::max(trials, 0L)));
  parallel_for(
      trials, threads,
      [&](long i) {
        GaussianSource src(nu0, seed, stream_id(StreamDomain::arl, static_cast<std::uint64_t>(i)));
        out[static_cast<std::size_t>(i)] = run_until_alarm(det, src, b, horizon);
      },
      tick);
  return out;
}

namespace {

struct ArlPoint {
  double mean = 0.0;
  double se = 0.0;
  double censored = 0.0;
};

ArlPoint summarize(const std::vector<StoppingResult>& runs) {
  const double n = static_cast<double>(runs.size());
  double sum = 0.0, sq = 0.0, cens = 0.0;
  for (const auto& r : runs) {
    const double t = static_cast<double>(r.alarm_time);
    sum += t;
    sq += t * t;
    cens += r.censored ? 1.0 : 0.0;
  }
  ArlPoint p;
  p.mean = sum / n;
  const double var = n > 1 ? std::max(0.0, (sq - n * p.mean * p.mean) / (n - 1.0)) : 0.0;
  p.se = std::sqrt(var / n);
  p.censored = cens / n;
  return p;
}

}  // namespace

CalibrationResult calibrate_threshold_mc(const Detector& det, const Gaussian& nu0, double gamma, long trials,
                                         std::uint64_t seed, const CalibrationOptions& opts) {
  if (trials < 100) throw DomainError("calibrate_threshold_mc: at least 100 trials are required");
  if (!(gamma > 1.0)) throw DomainError("calibrate_threshold_mc: gamma must exceed 1");
  const long horizon = static_cast<long>(std::ceil(opts.horizon_factor * gamma));
  const double b0 = reference_threshold(det, gamma);
  double lo = b0 > 0.0 ? 0.1 * b0 : b0;
  double hi = b0 > 0.0 ? 2.0 * b0 + 10.0 : 2.0 * std::log(gamma) + 10.0;
  const double band_lo = (1.0 - opts.tolerance) * gamma;
  const double band_hi = (1.0 + opts.tolerance) * gamma;

  CalibrationResult res;
  auto eval = [&](double b) {
    ++res.evaluations;
    return summarize(simulate_no_change(det, b, nu0, trials, horizon, seed, opts.threads, opts.tick));
  };
  auto accept = [&](double b, const ArlPoint& p) {
    res.b = b;
    res.arl = p.mean;
    res.arl_se = p.se;
    res.censored_fraction = p.censored;
    return res;
  };

  ArlPoint at_lo = eval(lo);
  if (at_lo.mean >= band_lo && at_lo.mean <= band_hi) return accept(lo, at_lo);
  // The bound can be loose enough that the lower end already overshoots;
  // b = 0 alarms within a few steps for any detector.
  if (at_lo.mean > band_hi && lo > 0.0) {
    hi = lo;
    lo = 0.0;
    at_lo = eval(lo);
    // Even b = 0 overshoots: the ARL constraint holds with room to spare.
    if (at_lo.mean >= band_lo && at_lo.censored < 1.0) return accept(lo, at_lo);
  }
  ArlPoint at_hi = eval(hi);
  for (int grow = 0; grow < 8 && at_hi.mean < band_lo && at_hi.censored < 1.0; ++grow) {
    lo = hi;
    at_lo = at_hi;
    hi = 2.0 * hi + 10.0;
    at_hi = eval(hi);
  }
  if (at_hi.mean >= band_lo && at_hi.mean <= band_hi) return accept(hi, at_hi);
  if (at_lo.mean > band_hi || at_hi.mean < band_lo) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "calibrate_threshold_mc: target ARL " << gamma << " not bracketed; ARL(" << lo << ") = " << at_lo.mean
        << ", ARL(" << hi << ") = " << at_hi.mean;
    throw Error(msg.str());
  }
  for (int it = 0; it < opts.max_bisections; ++it) {
    const double mid = 0.5 * (lo + hi);
    const ArlPoint p = eval(mid);
    if (p.mean >= band_lo && p.mean <= band_hi) return accept(mid, p);
    (p.mean < band_lo ? lo : hi) = mid;
  }
  std::ostringstream msg;
  msg.precision(10);
  msg << "calibrate_threshold_mc: no threshold in [" << lo << ", " << hi << "] gives an ARL within "
      << opts.tolerance * 100.0 << "% of " << gamma;
  throw ConvergenceError(msg.str(), hi - lo);
}

}  // namespace rcusum
