#pragma once

#include "rcusum/linalg.hpp"
#include "rcusum/random.hpp"

#include <string>
#include <variant>
#include <vector>

namespace rcusum {

// ---------------------------------------------------------------------------
// Mean-vector sets
// ---------------------------------------------------------------------------

struct SingletonSet {
  Vector point;
  bool operator==(const SingletonSet& o) const { return same(point, o.point); }
};

struct L2Ball {
  Vector center;
  double radius;
  bool operator==(const L2Ball& o) const { return same(center, o.center) && radius == o.radius; }
};

struct L1Ball {
  Vector center;
  double radius;
  bool operator==(const L1Ball& o) const { return same(center, o.center) && radius == o.radius; }
};

struct BoxSet {
  Vector lower;
  Vector upper;
  bool operator==(const BoxSet& o) const { return same(lower, o.lower) && same(upper, o.upper); }
};

// Convex set of mean vectors with a closed-form Euclidean projection.
class VectorSet {
 public:
  using Variant = std::variant<SingletonSet, L2Ball, L1Ball, BoxSet>;

  // Validates the payload (radius > 0, lower <= upper, consistent lengths).
  explicit VectorSet(Variant v);

  static VectorSet singleton(Vector p) { return VectorSet(SingletonSet{std::move(p)}); }
  static VectorSet l2_ball(Vector c, double r) { return VectorSet(L2Ball{std::move(c), r}); }
  static VectorSet l1_ball(Vector c, double r) { return VectorSet(L1Ball{std::move(c), r}); }
  static VectorSet box(Vector lo, Vector hi) { return VectorSet(BoxSet{std::move(lo), std::move(hi)}); }

  long dim() const noexcept { return dim_; }
  const Variant& variant() const noexcept { return v_; }
  std::string kind() const;

  bool operator==(const VectorSet& o) const { return v_ == o.v_; }

 private:
  Variant v_;
  long dim_;
};

Vector project(const VectorSet& s, const Vector& x);

// Euclidean distance from x to the set is at most tol.
bool contains(const VectorSet& s, const Vector& x, double tol);

// A member drawn from a fixed distribution over the set (used for audits
// and optimality checks, not for any estimate).
Vector random_member(const VectorSet& s, SeededStream& stream);

// ---------------------------------------------------------------------------
// Covariance sets
// ---------------------------------------------------------------------------

struct SingletonPsd {
  Matrix theta;
  bool operator==(const SingletonPsd& o) const { return same(theta, o.theta); }
};

// {Theta : 0 <= Theta, ||Theta|| <= radius}.
struct SpectralBall {
  long dim;
  double radius;
  bool operator==(const SpectralBall&) const = default;
};

// {base + sigma * direction : sigma in [low, high]}.
struct IntervalSet {
  Matrix base;
  Matrix direction;
  double low;
  double high;
  bool operator==(const IntervalSet& o) const {
    return same(base, o.base) && same(direction, o.direction) && low == o.low && high == o.high;
  }
};

class MatrixSet {
 public:
  using Variant = std::variant<SingletonPsd, SpectralBall, IntervalSet>;

  // Validates: members symmetric PSD, interval endpoints positive definite.
  explicit MatrixSet(Variant v);

  static MatrixSet singleton(Matrix theta) { return MatrixSet(SingletonPsd{std::move(theta)}); }
  static MatrixSet spectral_ball(long d, double radius) { return MatrixSet(SpectralBall{d, radius}); }
  static MatrixSet interval(Matrix base, Matrix direction, double low, double high) {
    return MatrixSet(IntervalSet{std::move(base), std::move(direction), low, high});
  }

  long dim() const noexcept { return dim_; }
  const Variant& variant() const noexcept { return v_; }
  std::string kind() const;

  bool operator==(const MatrixSet& o) const { return v_ == o.v_; }

 private:
  Variant v_;
  long dim_;
};

struct SupportResult {
  double value;
  Matrix argmax;
};

// max over Theta in s of Tr(Theta H) and a maximizer.
SupportResult support_linear(const MatrixSet& s, const Matrix& h);

// Constraint residuals of Theta with respect to s are at most tol.
bool contains(const MatrixSet& s, const Matrix& theta, double tol);

// Interval: sigma uniform on [low, high].  SpectralBall: radius * A A^T
// scaled to spectral norm radius, A with standard normal entries.
// Singleton: the point.
Matrix random_member(const MatrixSet& s, SeededStream& stream);

// Extreme members used for domination checks: the point, both interval
// endpoints, or radius * I for the spectral ball.
std::vector<Matrix> extreme_members(const MatrixSet& s);

}  // namespace rcusum
