#pragma once

#include "rcusum/linalg.hpp"
#include "rcusum/random.hpp"

namespace rcusum {

// Symmetric positive-definite covariance with its cached Cholesky factor.
// Immutable after construction.  Inputs are symmetrized as (A + A^T)/2;
// relative asymmetry above 1e-8 is rejected.
class Covariance {
 public:
  explicit Covariance(const Matrix& sigma);

  static Covariance identity(long d) { return Covariance(Matrix::Identity(d, d)); }

  long dim() const noexcept { return matrix_.rows(); }
  const Matrix& matrix() const noexcept { return matrix_; }
  // Lower-triangular L with L L^T = Sigma.
  const Matrix& factor() const noexcept { return factor_; }

  // L^{-1} v by forward substitution.
  Vector whiten(const Vector& v) const;
  // Sigma^{-1} v via two triangular solves.
  Vector solve(const Vector& v) const;
  Matrix solve(const Matrix& m) const;
  // v^T Sigma^{-1} v.
  double inv_quad(const Vector& v) const { return whiten(v).squaredNorm(); }
  double log_det() const;
  double max_inverse_eigenvalue() const;

  bool operator==(const Covariance& other) const { return same(matrix_, other.matrix_); }

 private:
  Matrix matrix_;
  Matrix factor_;
};

// Multivariate normal N(mean, covariance).
class Gaussian {
 public:
  Gaussian(Vector mean, Covariance covariance);
  Gaussian(Vector mean, const Matrix& covariance) : Gaussian(std::move(mean), Covariance(covariance)) {}

  static Gaussian standard(long d) { return Gaussian(Vector::Zero(d), Covariance::identity(d)); }

  long dim() const noexcept { return mean_.size(); }
  const Vector& mean() const noexcept { return mean_; }
  const Covariance& covariance() const noexcept { return cov_; }

  // One draw mean + L z, z ~ N(0, I), written into `out`.
  void draw(SeededStream& stream, Eigen::Ref<Vector> out, Eigen::Ref<Vector> scratch) const;

 private:
  Vector mean_;
  Covariance cov_;
};

// (x - y)^T Sigma^{-1} (x - y) through the cached factor.
double mahalanobis_sq(const Vector& x, const Vector& y, const Gaussian& g);
double mahalanobis_sq(const Vector& x, const Vector& y, const Covariance& sigma);

// n draws as the rows of an n x d matrix.
Matrix sample(const Gaussian& g, SeededStream& stream, long n);

// log p1(xi) - log p0(xi) for two Gaussians with a common covariance.
double log_likelihood_ratio(const Vector& xi, const Gaussian& g0, const Gaussian& g1);

// KL(ga || gb), closed form.
double kl_divergence(const Gaussian& ga, const Gaussian& gb);

}  // namespace rcusum
