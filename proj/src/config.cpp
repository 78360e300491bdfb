#include "rcusum/config.hpp"

#include "rcusum/errors.hpp"
#include "rcusum/gaussian.hpp"
#include "rcusum/format.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace rcusum {

namespace {

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }
std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

class Reader {
 public:
  std::vector<std::string> errors;
  long d = 0;  // 0 until the dimension is known and valid

  void error(const std::string& path, const std::string& msg) { errors.push_back(path + ": " + msg); }

  bool is_map(const YAML::Node& n, const std::string& path) {
    if (n.IsMap()) return true;
    error(path, "expected a mapping");
    return false;
  }

  void check_keys(const YAML::Node& map, const std::string& path, std::initializer_list<std::string_view> allowed) {
    for (const auto& kv : map) {
      const std::string key = kv.first.as<std::string>();
      if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) error(join(path, key), "unknown key");
    }
  }

  YAML::Node required(const YAML::Node& map, const std::string& path, const std::string& key) {
    YAML::Node n = map[key];
    if (!n) error(join(path, key), "required field is missing");
    return n;
  }

  std::optional<double> number(const YAML::Node& n, const std::string& path) {
    if (!n) return std::nullopt;
    if (!n.IsScalar()) {
      error(path, "expected a number");
      return std::nullopt;
    }
    try {
      const double v = n.as<double>();
      if (!std::isfinite(v)) {
        error(path, "must be finite");
        return std::nullopt;
      }
      return v;
    } catch (const YAML::Exception&) {
      error(path, "expected a number, got '" + n.Scalar() + "'");
      return std::nullopt;
    }
  }

  std::optional<long> integer(const YAML::Node& n, const std::string& path) {
    if (!n) return std::nullopt;
    try {
      if (!n.IsScalar()) throw YAML::Exception(YAML::Mark::null_mark(), "");
      return n.as<long>();
    } catch (const YAML::Exception&) {
      error(path, "expected an integer");
      return std::nullopt;
    }
  }

  std::optional<std::string> string(const YAML::Node& n, const std::string& path) {
    if (!n) return std::nullopt;
    if (!n.IsScalar()) {
      error(path, "expected a string");
      return std::nullopt;
    }
    return n.Scalar();
  }

  // A scalar broadcast to length d, or an explicit list of length d.
  std::optional<Vector> vector(const YAML::Node& n, const std::string& path) {
    if (!n) return std::nullopt;
    if (n.IsScalar()) {
      auto v = number(n, path);
      if (!v || d <= 0) return std::nullopt;
      return Vector::Constant(d, *v);
    }
    if (!n.IsSequence()) {
      error(path, "expected a number or a list of numbers");
      return std::nullopt;
    }
    Vector out(static_cast<long>(n.size()));
    bool ok = true;
    for (std::size_t i = 0; i < n.size(); ++i) {
      auto v = number(n[i], index(path, i));
      if (v) {
        out(static_cast<long>(i)) = *v;
      } else {
        ok = false;
      }
    }
    if (d > 0 && out.size() != d) {
      error(path, "expected " + std::to_string(d) + " entries, got " + std::to_string(out.size()));
      return std::nullopt;
    }
    if (!ok || d <= 0) return std::nullopt;
    return out;
  }

  // Sum of the listed parts: identity c, diagonal v, sqexp_offdiag
  // {scale s, length l} (s exp(-(i-j)^2 / l^2) off the diagonal), rows.
  std::optional<Matrix> matrix(const YAML::Node& n, const std::string& path) {
    if (!n) return std::nullopt;
    if (!is_map(n, path)) return std::nullopt;
    check_keys(n, path, {"identity", "diagonal", "sqexp_offdiag", "rows"});
    if (n.size() == 0) {
      error(path, "matrix description needs at least one of identity, diagonal, sqexp_offdiag, rows");
      return std::nullopt;
    }
    if (d <= 0) return std::nullopt;
    Matrix m = Matrix::Zero(d, d);
    bool ok = true;
    if (n["identity"]) {
      auto c = number(n["identity"], join(path, "identity"));
      c ? void(m.diagonal().array() += *c) : void(ok = false);
    }
    if (n["diagonal"]) {
      auto v = vector(n["diagonal"], join(path, "diagonal"));
      v ? void(m.diagonal() += *v) : void(ok = false);
    }
    if (YAML::Node sq = n["sqexp_offdiag"]) {
      const std::string p = join(path, "sqexp_offdiag");
      if (is_map(sq, p)) {
        check_keys(sq, p, {"scale", "length"});
        auto s = number(required(sq, p, "scale"), join(p, "scale"));
        auto l = number(required(sq, p, "length"), join(p, "length"));
        if (l && *l <= 0.0) {
          error(join(p, "length"), "must be positive");
          l.reset();
        }
        if (s && l) {
          for (long i = 0; i < d; ++i) {
            for (long j = 0; j < d; ++j) {
              if (i != j) {
                const double k = static_cast<double>(i - j) / *l;
                m(i, j) += *s * std::exp(-k * k);
              }
            }
          }
        } else {
          ok = false;
        }
      } else {
        ok = false;
      }
    }
    if (YAML::Node rows = n["rows"]) {
      const std::string p = join(path, "rows");
      if (!rows.IsSequence() || static_cast<long>(rows.size()) != d) {
        error(p, "expected " + std::to_string(d) + " rows");
        ok = false;
      } else {
        for (std::size_t i = 0; i < rows.size(); ++i) {
          auto r = vector(rows[i], index(p, i));
          if (r && rows[i].IsSequence()) {
            m.row(static_cast<long>(i)) += r->transpose();
          } else {
            if (r) error(index(p, i), "expected a list of numbers");
            ok = false;
          }
        }
      }
    }
    if (!ok) return std::nullopt;
    return m;
  }

  std::optional<VectorSet> vector_set(const YAML::Node& n, const std::string& path) {
    if (!n) return std::nullopt;
    if (!is_map(n, path)) return std::nullopt;
    check_keys(n, path, {"singleton", "l2_ball", "l1_ball", "box"});
    if (n.size() != 1) {
      error(path, "expected exactly one of singleton, l2_ball, l1_ball, box");
      return std::nullopt;
    }
    const std::string kind = n.begin()->first.as<std::string>();
    const YAML::Node body = n.begin()->second;
    const std::string p = join(path, kind);
    auto build = [&](auto&& make) -> std::optional<VectorSet> {
      try {
        return make();
      } catch (const Error& e) {
        error(p, e.what());
        return std::nullopt;
      }
    };
    if (kind == "singleton") {
      auto v = vector(body, p);
      if (!v) return std::nullopt;
      return build([&] { return VectorSet::singleton(*v); });
    }
    if (!is_map(body, p)) return std::nullopt;
    if (kind == "box") {
      check_keys(body, p, {"lower", "upper"});
      auto lo = vector(required(body, p, "lower"), join(p, "lower"));
      auto hi = vector(required(body, p, "upper"), join(p, "upper"));
      if (!lo || !hi) return std::nullopt;
      return build([&] { return VectorSet::box(*lo, *hi); });
    }
    if (kind == "l1_ball") {
      check_keys(body, p, {"center", "radius"});
      auto c = vector(required(body, p, "center"), join(p, "center"));
      auto r = number(required(body, p, "radius"), join(p, "radius"));
      if (!c || !r) return std::nullopt;
      return build([&] { return VectorSet::l1_ball(*c, *r); });
    }
    check_keys(body, p, {"center", "radius", "radius_squared"});
    auto c = vector(required(body, p, "center"), join(p, "center"));
    std::optional<double> r;
    if (body["radius"] && body["radius_squared"]) {
      error(p, "give either radius or radius_squared, not both");
    } else if (body["radius_squared"]) {
      auto r2 = number(body["radius_squared"], join(p, "radius_squared"));
      if (r2 && *r2 <= 0.0) {
        error(join(p, "radius_squared"), "must be positive");
      } else if (r2) {
        r = std::sqrt(*r2);
      }
    } else {
      r = number(required(body, p, "radius"), join(p, "radius"));
    }
    if (!c || !r) return std::nullopt;
    return build([&] { return VectorSet::l2_ball(*c, *r); });
  }

  std::optional<MatrixSet> matrix_set(const YAML::Node& n, const std::string& path) {
    if (!n) return std::nullopt;
    if (!is_map(n, path)) return std::nullopt;
    check_keys(n, path, {"singleton", "spectral_ball", "interval"});
    if (n.size() != 1) {
      error(path, "expected exactly one of singleton, spectral_ball, interval");
      return std::nullopt;
    }
    const std::string kind = n.begin()->first.as<std::string>();
    const YAML::Node body = n.begin()->second;
    const std::string p = join(path, kind);
    auto build = [&](auto&& make) -> std::optional<MatrixSet> {
      try {
        return make();
      } catch (const Error& e) {
        error(p, e.what());
        return std::nullopt;
      }
    };
    if (kind == "singleton") {
      auto m = matrix(body, p);
      if (!m) return std::nullopt;
      return build([&] { return MatrixSet::singleton(*m); });
    }
    if (!is_map(body, p)) return std::nullopt;
    if (kind == "spectral_ball") {
      check_keys(body, p, {"radius"});
      auto r = number(required(body, p, "radius"), join(p, "radius"));
      if (!r || d <= 0) return std::nullopt;
      return build([&] { return MatrixSet::spectral_ball(d, *r); });
    }
    check_keys(body, p, {"base", "direction", "low", "high"});
    auto b = matrix(required(body, p, "base"), join(p, "base"));
    auto v = matrix(required(body, p, "direction"), join(p, "direction"));
    auto lo = number(required(body, p, "low"), join(p, "low"));
    auto hi = number(required(body, p, "high"), join(p, "high"));
    if (!b || !v || !lo || !hi) return std::nullopt;
    return build([&] { return MatrixSet::interval(*b, *v, *lo, *hi); });
  }

  std::optional<Matrix> covariance(const YAML::Node& n, const std::string& path) {
    auto m = matrix(n, path);
    if (!m) return std::nullopt;
    try {
      Covariance c(*m);
      return c.matrix();
    } catch (const Error& e) {
      error(path, e.what());
      return std::nullopt;
    }
  }

  std::optional<ScenarioConfig> scenario(const YAML::Node& n, const std::string& path);
};

std::optional<ScenarioConfig> Reader::scenario(const YAML::Node& n, const std::string& path) {
  if (!is_map(n, path)) return std::nullopt;
  auto name = string(required(n, path, "name"), join(path, "name"));
  auto kind = string(required(n, path, "kind"), join(path, "kind"));
  if (!kind) return std::nullopt;

  if (*kind == "mean_shift") {
    check_keys(n, path, {"name", "kind", "covariance", "M0", "M1", "truth", "baseline", "solver"});
    auto cov = covariance(required(n, path, "covariance"), join(path, "covariance"));
    auto m0 = vector_set(required(n, path, "M0"), join(path, "M0"));
    auto m1 = vector_set(required(n, path, "M1"), join(path, "M1"));

    std::optional<MeanTruth> truth;
    const std::string tp = join(path, "truth");
    if (YAML::Node t = required(n, path, "truth")) {
      if (t.IsScalar() && t.Scalar() == "random_member") {
        truth = RandomMemberTruth{};
      } else if (t.IsMap()) {
        check_keys(t, tp, {"uniform_box"});
        if (YAML::Node ub = t["uniform_box"]; ub && is_map(ub, join(tp, "uniform_box"))) {
          const std::string up = join(tp, "uniform_box");
          check_keys(ub, up, {"low", "high"});
          auto lo = number(required(ub, up, "low"), join(up, "low"));
          auto hi = number(required(ub, up, "high"), join(up, "high"));
          if (lo && hi && *lo > *hi) error(up, "low must not exceed high");
          if (lo && hi && *lo <= *hi) truth = UniformBoxTruth{*lo, *hi};
        } else if (!t["uniform_box"]) {
          error(tp, "expected random_member or uniform_box");
        }
      } else {
        error(tp, "expected random_member or uniform_box");
      }
    }

    std::optional<Vector> pre, post;
    const std::string bp = join(path, "baseline");
    if (YAML::Node b = required(n, path, "baseline"); b && is_map(b, bp)) {
      check_keys(b, bp, {"pre_mean", "post_mean"});
      pre = vector(required(b, bp, "pre_mean"), join(bp, "pre_mean"));
      post = vector(required(b, bp, "post_mean"), join(bp, "post_mean"));
    }

    LfpOptions solver;
    const std::string sp = join(path, "solver");
    if (YAML::Node s = n["solver"]; s && is_map(s, sp)) {
      check_keys(s, sp, {"tol", "max_iters"});
      if (auto v = number(s["tol"], join(sp, "tol"))) {
        *v > 0.0 ? void(solver.tol = *v) : error(join(sp, "tol"), "must be positive");
      }
      if (auto v = integer(s["max_iters"], join(sp, "max_iters"))) {
        *v >= 1 ? void(solver.max_iters = *v) : error(join(sp, "max_iters"), "must be at least 1");
      }
    }
    if (!name || !cov || !m0 || !m1 || !truth || !pre || !post) return std::nullopt;
    return ScenarioConfig{*name, MeanShiftSpec{*cov, *m0, *m1, *truth, *pre, *post, solver}};
  }

  if (*kind == "covariance_shift") {
    check_keys(n, path, {"name", "kind", "mean0", "mean1", "U0", "U1", "truth", "baseline", "solver"});
    auto mean0 = vector(required(n, path, "mean0"), join(path, "mean0"));
    auto mean1 = vector(required(n, path, "mean1"), join(path, "mean1"));
    auto u0 = matrix_set(required(n, path, "U0"), join(path, "U0"));
    auto u1 = matrix_set(required(n, path, "U1"), join(path, "U1"));
    bool truth_ok = false;
    if (YAML::Node t = required(n, path, "truth")) {
      truth_ok = t.IsScalar() && t.Scalar() == "random_member";
      if (!truth_ok) error(join(path, "truth"), "covariance scenarios support only random_member");
    }

    std::optional<Matrix> pre;
    std::optional<Matrix> post;
    bool post_random = false;
    const std::string bp = join(path, "baseline");
    if (YAML::Node b = required(n, path, "baseline"); b && is_map(b, bp)) {
      check_keys(b, bp, {"pre_covariance", "post_covariance"});
      pre = covariance(required(b, bp, "pre_covariance"), join(bp, "pre_covariance"));
      if (YAML::Node pc = required(b, bp, "post_covariance")) {
        if (pc.IsScalar() && pc.Scalar() == "random_member") {
          post_random = true;
        } else {
          post = covariance(pc, join(bp, "post_covariance"));
        }
      }
    }

    SaddleOptions solver;
    const std::string sp = join(path, "solver");
    if (YAML::Node s = n["solver"]; s && is_map(s, sp)) {
      check_keys(s, sp, {"beta", "gap_tol", "max_iters"});
      if (auto v = number(s["beta"], join(sp, "beta"))) {
        (*v > 0.0 && *v < 1.0) ? void(solver.beta = *v) : error(join(sp, "beta"), "must lie in the open interval (0, 1)");
      }
      if (auto v = number(s["gap_tol"], join(sp, "gap_tol"))) {
        *v > 0.0 ? void(solver.gap_tol = *v) : error(join(sp, "gap_tol"), "must be positive");
      }
      if (auto v = integer(s["max_iters"], join(sp, "max_iters"))) {
        *v >= 1 ? void(solver.max_iters = *v) : error(join(sp, "max_iters"), "must be at least 1");
      }
    }
    if (!name || !mean0 || !mean1 || !u0 || !u1 || !truth_ok || !pre || !(post || post_random)) return std::nullopt;
    return ScenarioConfig{*name, CovarianceShiftSpec{*mean0, *mean1, *u0, *u1, *pre, post, solver}};
  }

  error(join(path, "kind"), "expected mean_shift or covariance_shift, got '" + *kind + "'");
  return std::nullopt;
}

// Numbers are written as plain scalars in shortest round-trip form.
void emit_number(YAML::Emitter& out, double v) { out << format_number(v); }

void emit_vector(YAML::Emitter& out, const Vector& v) {
  out << YAML::Flow << YAML::BeginSeq;
  for (long i = 0; i < v.size(); ++i) emit_number(out, v(i));
  out << YAML::EndSeq;
}

void emit_matrix(YAML::Emitter& out, const Matrix& m) {
  out << YAML::BeginMap << YAML::Key << "rows" << YAML::Value << YAML::BeginSeq;
  for (long i = 0; i < m.rows(); ++i) emit_vector(out, m.row(i).transpose());
  out << YAML::EndSeq << YAML::EndMap;
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void emit_vector_set(YAML::Emitter& out, const VectorSet& s) {
  out << YAML::BeginMap;
  std::visit(overloaded{
                 [&](const SingletonSet& p) {
                   out << YAML::Key << "singleton" << YAML::Value;
                   emit_vector(out, p.point);
                 },
                 [&](const L2Ball& b) {
                   out << YAML::Key << "l2_ball" << YAML::Value << YAML::BeginMap << YAML::Key << "center"
                       << YAML::Value;
                   emit_vector(out, b.center);
                   out << YAML::Key << "radius" << YAML::Value;
                   emit_number(out, b.radius);
                   out << YAML::EndMap;
                 },
                 [&](const L1Ball& b) {
                   out << YAML::Key << "l1_ball" << YAML::Value << YAML::BeginMap << YAML::Key << "center"
                       << YAML::Value;
                   emit_vector(out, b.center);
                   out << YAML::Key << "radius" << YAML::Value;
                   emit_number(out, b.radius);
                   out << YAML::EndMap;
                 },
                 [&](const BoxSet& b) {
                   out << YAML::Key << "box" << YAML::Value << YAML::BeginMap << YAML::Key << "lower" << YAML::Value;
                   emit_vector(out, b.lower);
                   out << YAML::Key << "upper" << YAML::Value;
                   emit_vector(out, b.upper);
                   out << YAML::EndMap;
                 },
             },
             s.variant());
  out << YAML::EndMap;
}

void emit_matrix_set(YAML::Emitter& out, const MatrixSet& s) {
  out << YAML::BeginMap;
  std::visit(overloaded{
                 [&](const SingletonPsd& p) {
                   out << YAML::Key << "singleton" << YAML::Value;
                   emit_matrix(out, p.theta);
                 },
                 [&](const SpectralBall& b) {
                   out << YAML::Key << "spectral_ball" << YAML::Value << YAML::BeginMap << YAML::Key << "radius"
                       << YAML::Value;
                   emit_number(out, b.radius);
                   out << YAML::EndMap;
                 },
                 [&](const IntervalSet& v) {
                   out << YAML::Key << "interval" << YAML::Value << YAML::BeginMap << YAML::Key << "base"
                       << YAML::Value;
                   emit_matrix(out, v.base);
                   out << YAML::Key << "direction" << YAML::Value;
                   emit_matrix(out, v.direction);
                   out << YAML::Key << "low" << YAML::Value;
                   emit_number(out, v.low);
                   out << YAML::Key << "high" << YAML::Value;
                   emit_number(out, v.high);
                   out << YAML::EndMap;
                 },
             },
             s.variant());
  out << YAML::EndMap;
}

}  // namespace

bool MeanShiftSpec::operator==(const MeanShiftSpec& o) const {
  return same(covariance, o.covariance) && m0 == o.m0 && m1 == o.m1 && truth == o.truth &&
         same(baseline_pre_mean, o.baseline_pre_mean) && same(baseline_post_mean, o.baseline_post_mean) &&
         solver.tol == o.solver.tol && solver.max_iters == o.solver.max_iters;
}

bool CovarianceShiftSpec::operator==(const CovarianceShiftSpec& o) const {
  const bool post_equal = baseline_post_covariance.has_value() == o.baseline_post_covariance.has_value() &&
                          (!baseline_post_covariance || same(*baseline_post_covariance, *o.baseline_post_covariance));
  return same(mean0, o.mean0) && same(mean1, o.mean1) && u0 == o.u0 && u1 == o.u1 &&
         same(baseline_pre_covariance, o.baseline_pre_covariance) && post_equal && solver.beta == o.solver.beta &&
         solver.gap_tol == o.solver.gap_tol && solver.max_iters == o.solver.max_iters;
}

bool ExperimentConfig::operator==(const ExperimentConfig& o) const {
  return dimension == o.dimension && gamma == o.gamma && seed == o.seed && threshold_mode == o.threshold_mode &&
         arl_trials == o.arl_trials && delay_trials == o.delay_trials && arl_horizon_factor == o.arl_horizon_factor &&
         delay_horizon == o.delay_horizon && scenarios == o.scenarios;
}

ExperimentConfig parse_config(std::string_view text) {
  YAML::Node root;
  try {
    root = YAML::Load(std::string(text));
  } catch (const YAML::Exception& e) {
    throw ConfigError({std::string("malformed document: ") + e.what()});
  }
  Reader r;
  if (!root || root.IsNull()) {
    throw ConfigError({"dimension: required field is missing", "gamma: required field is missing",
                       "seed: required field is missing", "threshold_mode: required field is missing",
                       "trials: required field is missing", "scenarios: required field is missing"});
  }
  if (!root.IsMap()) throw ConfigError({"document: expected a mapping at the top level"});
  r.check_keys(root, "", {"dimension", "gamma", "seed", "threshold_mode", "trials", "horizon", "scenarios"});

  ExperimentConfig cfg;
  if (auto d = r.integer(r.required(root, "", "dimension"), "dimension")) {
    if (*d >= 1) {
      cfg.dimension = *d;
      r.d = *d;
    } else {
      r.error("dimension", "must be at least 1");
    }
  }
  if (auto g = r.number(r.required(root, "", "gamma"), "gamma")) {
    *g > 1.0 ? void(cfg.gamma = *g) : r.error("gamma", "must exceed 1");
  }
  if (YAML::Node s = r.required(root, "", "seed")) {
    try {
      if (!s.IsScalar() || (!s.Scalar().empty() && s.Scalar()[0] == '-')) throw YAML::Exception(YAML::Mark::null_mark(), "");
      cfg.seed = s.as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      r.error("seed", "expected an unsigned 64-bit integer");
    }
  }
  if (auto m = r.string(r.required(root, "", "threshold_mode"), "threshold_mode")) {
    if (*m == "theoretical") {
      cfg.threshold_mode = ThresholdMode::theoretical;
    } else if (*m == "calibrated") {
      cfg.threshold_mode = ThresholdMode::calibrated;
    } else {
      r.error("threshold_mode", "expected theoretical or calibrated, got '" + *m + "'");
    }
  }
  if (YAML::Node t = r.required(root, "", "trials"); t && r.is_map(t, "trials")) {
    r.check_keys(t, "trials", {"arl", "delay"});
    for (auto [key, field] : {std::pair{"arl", &cfg.arl_trials}, std::pair{"delay", &cfg.delay_trials}}) {
      const std::string p = join("trials", key);
      if (auto v = r.integer(r.required(t, "trials", key), p)) {
        *v >= 100 ? void(*field = *v) : r.error(p, "must be at least 100");
      }
    }
  }
  if (YAML::Node h = root["horizon"]; h && r.is_map(h, "horizon")) {
    r.check_keys(h, "horizon", {"arl_factor", "delay"});
    if (auto v = r.number(h["arl_factor"], "horizon.arl_factor")) {
      *v >= 1.0 ? void(cfg.arl_horizon_factor = *v) : r.error("horizon.arl_factor", "must be at least 1");
    }
    if (auto v = r.integer(h["delay"], "horizon.delay")) {
      *v >= 1 ? void(cfg.delay_horizon = *v) : r.error("horizon.delay", "must be at least 1");
    }
  }
  if (YAML::Node s = r.required(root, "", "scenarios")) {
    if (!s.IsSequence() || s.size() == 0) {
      r.error("scenarios", "expected a non-empty list");
    } else {
      std::set<std::string> names;
      for (std::size_t i = 0; i < s.size(); ++i) {
        if (auto sc = r.scenario(s[i], index("scenarios", i))) {
          if (!names.insert(sc->name).second) r.error(index("scenarios", i) + ".name", "duplicate scenario name");
          cfg.scenarios.push_back(std::move(*sc));
        }
      }
    }
  }
  if (!r.errors.empty()) throw ConfigError(std::move(r.errors));
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError({path.string() + ": cannot open file"});
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

std::string serialize_config(const ExperimentConfig& cfg) {
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "dimension" << YAML::Value << cfg.dimension;
  out << YAML::Key << "gamma" << YAML::Value;
  emit_number(out, cfg.gamma);
  out << YAML::Key << "seed" << YAML::Value << cfg.seed;
  out << YAML::Key << "threshold_mode" << YAML::Value
      << (cfg.threshold_mode == ThresholdMode::theoretical ? "theoretical" : "calibrated");
  out << YAML::Key << "trials" << YAML::Value << YAML::BeginMap << YAML::Key << "arl" << YAML::Value
      << cfg.arl_trials << YAML::Key << "delay" << YAML::Value << cfg.delay_trials << YAML::EndMap;
  out << YAML::Key << "horizon" << YAML::Value << YAML::BeginMap << YAML::Key << "arl_factor" << YAML::Value;
  emit_number(out, cfg.arl_horizon_factor);
  out << YAML::Key << "delay" << YAML::Value << cfg.delay_horizon << YAML::EndMap;
  out << YAML::Key << "scenarios" << YAML::Value << YAML::BeginSeq;
  for (const ScenarioConfig& sc : cfg.scenarios) {
    out << YAML::BeginMap << YAML::Key << "name" << YAML::Value << YAML::DoubleQuoted << sc.name;
    std::visit(overloaded{
                   [&](const MeanShiftSpec& m) {
                     out << YAML::Key << "kind" << YAML::Value << "mean_shift";
                     out << YAML::Key << "covariance" << YAML::Value;
                     emit_matrix(out, m.covariance);
                     out << YAML::Key << "M0" << YAML::Value;
                     emit_vector_set(out, m.m0);
                     out << YAML::Key << "M1" << YAML::Value;
                     emit_vector_set(out, m.m1);
                     out << YAML::Key << "truth" << YAML::Value;
                     if (const auto* ub = std::get_if<UniformBoxTruth>(&m.truth)) {
                       out << YAML::BeginMap << YAML::Key << "uniform_box" << YAML::Value << YAML::BeginMap
                           << YAML::Key << "low" << YAML::Value;
                       emit_number(out, ub->low);
                       out << YAML::Key << "high" << YAML::Value;
                       emit_number(out, ub->high);
                       out << YAML::EndMap << YAML::EndMap;
                     } else {
                       out << "random_member";
                     }
                     out << YAML::Key << "baseline" << YAML::Value << YAML::BeginMap << YAML::Key << "pre_mean"
                         << YAML::Value;
                     emit_vector(out, m.baseline_pre_mean);
                     out << YAML::Key << "post_mean" << YAML::Value;
                     emit_vector(out, m.baseline_post_mean);
                     out << YAML::EndMap;
                     out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap << YAML::Key << "tol"
                         << YAML::Value;
                     emit_number(out, m.solver.tol);
                     out << YAML::Key << "max_iters" << YAML::Value << m.solver.max_iters << YAML::EndMap;
                   },
                   [&](const CovarianceShiftSpec& c) {
                     out << YAML::Key << "kind" << YAML::Value << "covariance_shift";
                     out << YAML::Key << "mean0" << YAML::Value;
                     emit_vector(out, c.mean0);
                     out << YAML::Key << "mean1" << YAML::Value;
                     emit_vector(out, c.mean1);
                     out << YAML::Key << "U0" << YAML::Value;
                     emit_matrix_set(out, c.u0);
                     out << YAML::Key << "U1" << YAML::Value;
                     emit_matrix_set(out, c.u1);
                     out << YAML::Key << "truth" << YAML::Value << "random_member";
                     out << YAML::Key << "baseline" << YAML::Value << YAML::BeginMap << YAML::Key
                         << "pre_covariance" << YAML::Value;
                     emit_matrix(out, c.baseline_pre_covariance);
                     out << YAML::Key << "post_covariance" << YAML::Value;
                     if (c.baseline_post_covariance) {
                       emit_matrix(out, *c.baseline_post_covariance);
                     } else {
                       out << "random_member";
                     }
                     out << YAML::EndMap;
                     out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap << YAML::Key << "beta"
                         << YAML::Value;
                     emit_number(out, c.solver.beta);
                     out << YAML::Key << "gap_tol" << YAML::Value;
                     emit_number(out, c.solver.gap_tol);
                     out << YAML::Key << "max_iters" << YAML::Value << c.solver.max_iters << YAML::EndMap;
                   },
               },
               sc.spec);
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

const ScenarioConfig& find_scenario(const ExperimentConfig& cfg, std::string_view name) {
  for (const auto& s : cfg.scenarios) {
    if (s.name == name) return s;
  }
  std::string known;
  for (const auto& s : cfg.scenarios) known += (known.empty() ? "" : ", ") + s.name;
  throw ConfigError({"scenario '" + std::string(name) + "' not found (available: " + known + ")"});
}

}  // namespace rcusum
