#pragma once

#include "rcusum/lfp.hpp"
#include "rcusum/quadratic.hpp"
#include "rcusum/uncertainty.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace rcusum {

enum class ThresholdMode { theoretical, calibrated };

// Per-trial post-change mean: entries uniform on [low, high], or a member
// of M1 drawn by random_member.
struct UniformBoxTruth {
  double low;
  double high;
  bool operator==(const UniformBoxTruth&) const = default;
};
struct RandomMemberTruth {
  bool operator==(const RandomMemberTruth&) const = default;
};
using MeanTruth = std::variant<UniformBoxTruth, RandomMemberTruth>;

struct MeanShiftSpec {
  Matrix covariance;
  VectorSet m0;
  VectorSet m1;
  MeanTruth truth;
  Vector baseline_pre_mean;
  Vector baseline_post_mean;
  LfpOptions solver;

  bool operator==(const MeanShiftSpec& o) const;
};

// Post-change covariances are random members of U1.
struct CovarianceShiftSpec {
  Vector mean0;
  Vector mean1;
  MatrixSet u0;
  MatrixSet u1;
  Matrix baseline_pre_covariance;
  // Empty: a random member of U1, fixed by the scenario seed.
  std::optional<Matrix> baseline_post_covariance;
  SaddleOptions solver;

  bool operator==(const CovarianceShiftSpec& o) const;
};

struct ScenarioConfig {
  std::string name;
  std::variant<MeanShiftSpec, CovarianceShiftSpec> spec;

  bool operator==(const ScenarioConfig& o) const { return name == o.name && spec == o.spec; }
};

struct ExperimentConfig {
  long dimension = 0;
  double gamma = 0.0;
  std::uint64_t seed = 0;
  ThresholdMode threshold_mode = ThresholdMode::calibrated;
  long arl_trials = 0;
  long delay_trials = 0;
  double arl_horizon_factor = 50.0;  // ARL runs are censored at this many multiples of gamma
  long delay_horizon = 10000;
  std::vector<ScenarioConfig> scenarios;

  bool operator==(const ExperimentConfig& o) const;
};

// Parses and validates a YAML document; every schema violation is
// collected into the thrown ConfigError.
ExperimentConfig parse_config(std::string_view text);
ExperimentConfig load_config(const std::filesystem::path& path);

// Canonical YAML form (explicit lists, shortest round-trip numbers).
std::string serialize_config(const ExperimentConfig& cfg);

const ScenarioConfig& find_scenario(const ExperimentConfig& cfg, std::string_view name);

}  // namespace rcusum
