#pragma once

#include "rcusum/detector.hpp"
#include "rcusum/gaussian.hpp"

#include <cstdint>
#include <functional>
#include <vector>

namespace rcusum {

// S_t = max(S_{t-1}, 0) + increment, alarm at the first t with S_t >= b.
struct CusumState {
  double statistic = 0.0;
  long time = 0;
  double threshold = 0.0;
  bool alarmed = false;

  CusumState() = default;
  explicit CusumState(double b) : threshold(b) {}
  void reset() noexcept {
    statistic = 0.0;
    time = 0;
    alarmed = false;
  }
};

// Throws Error if the state has already alarmed.
CusumState step(CusumState state, double increment);

struct StoppingResult {
  long alarm_time = 0;  // equals horizon when censored
  bool censored = false;
  double final_statistic = 0.0;
  long increments_consumed = 0;
};

// log gamma + log(eps / (1 - eps)): the smallest threshold certifying an
// average run length of at least gamma.  eps must lie in (0, 1).
double threshold_from_gamma(double gamma, double epsilon_star);

// Threshold a detector starts its calibration from: the certified one
// when it carries an epsilon, log gamma for plain likelihood ratios.
double reference_threshold(const Detector& det, double gamma);

// Supplies observations one at a time.
class ObservationSource {
 public:
  virtual ~ObservationSource() = default;
  virtual long dim() const = 0;
  // Writes the next observation; false when exhausted.
  virtual bool next(Eigen::Ref<Vector> out) = 0;
};

// Endless i.i.d. draws from a Gaussian.
class GaussianSource final : public ObservationSource {
 public:
  GaussianSource(const Gaussian& g, std::uint64_t seed, std::uint64_t stream_id);
  long dim() const override { return g_->dim(); }
  bool next(Eigen::Ref<Vector> out) override;

 private:
  const Gaussian* g_;
  SeededStream stream_;
  Vector scratch_;
};

// Draws from `pre` for the first kappa - 1 observations, then from `post`;
// both read the same substream.
class ChangeSource final : public ObservationSource {
 public:
  ChangeSource(const Gaussian& pre, const Gaussian& post, long kappa, std::uint64_t seed, std::uint64_t stream_id);
  long dim() const override { return post_->dim(); }
  bool next(Eigen::Ref<Vector> out) override;

 private:
  const Gaussian* pre_;
  const Gaussian* post_;
  long kappa_;
  long t_ = 0;
  SeededStream stream_;
  Vector scratch_;
};

// A fixed list of observations (rows).
class MatrixSource final : public ObservationSource {
 public:
  explicit MatrixSource(Matrix rows) : rows_(std::move(rows)) {}
  long dim() const override { return rows_.cols(); }
  bool next(Eigen::Ref<Vector> out) override;

 private:
  Matrix rows_;
  long pos_ = 0;
};

// Runs the CUSUM with increments -phi(xi) until alarm or horizon.
// Throws Error if the source runs dry first.
StoppingResult run_until_alarm(const Detector& det, ObservationSource& source, double b, long horizon);

// Run i draws from substream (arl, i) of seed, so the same seed gives the
// same paths for every b.
std::vector<StoppingResult> simulate_no_change(const Detector& det, double b, const Gaussian& nu0, long trials,
                                               long horizon, std::uint64_t seed, int threads = 1,
                                               const std::function<void()>& tick = {});

struct CalibrationOptions {
  double horizon_factor = 50.0;  // ARL horizon as a multiple of gamma
  double tolerance = 0.05;       // relative band around gamma
  int max_bisections = 60;
  int threads = 1;
  std::function<void()> tick;  // called once per simulated run
};

struct CalibrationResult {
  double b = 0.0;
  double arl = 0.0;
  double arl_se = 0.0;
  double censored_fraction = 0.0;
  int evaluations = 0;
};

// Bisection on b so that the Monte Carlo ARL under nu0 (common random
// numbers for every b, censored runs counted at the horizon) lands within
// the tolerance band around gamma.  The bracket is [0.1 b0, 2 b0 + 10]
// around the reference threshold b0, or [b0, 2 log gamma + 10] when b0 <= 0.
// A bracket that misses gamma is widened down to b = 0 and upward by
// doubling before giving up.  Thresholds stay non-negative: if b = 0
// already exceeds the band, the result is b = 0 with its larger ARL.
CalibrationResult calibrate_threshold_mc(const Detector& det, const Gaussian& nu0, double gamma, long trials,
                                         std::uint64_t seed, const CalibrationOptions& opts = {});

}  // namespace rcusum
