#include "rcusum/gaussian.hpp"

#include "rcusum/errors.hpp"

#include <algorithm>
#include <cmath>

namespace rcusum {

Covariance::Covariance(const Matrix& sigma) : matrix_(symmetrized(sigma, "covariance")) {
  if (matrix_.rows() == 0) throw DomainError("covariance must have dimension >= 1");
  Eigen::LLT<Matrix> llt(matrix_);
  if (llt.info() != Eigen::Success) throw DomainError("covariance is not positive definite");
  factor_ = llt.matrixL();
  if (factor_.diagonal().minCoeff() <= 0.0) throw DomainError("covariance is not positive definite");
}

Vector Covariance::whiten(const Vector& v) const {
  check_length(v, dim(), "whiten");
  return factor_.triangularView<Eigen::Lower>().solve(v);
}

Vector Covariance::solve(const Vector& v) const {
  return factor_.transpose().triangularView<Eigen::Upper>().solve(whiten(v));
}

Matrix Covariance::solve(const Matrix& m) const {
  check_square(m, dim(), "covariance solve");
  const Matrix w = factor_.triangularView<Eigen::Lower>().solve(m);
  return factor_.transpose().triangularView<Eigen::Upper>().solve(w);
}

double Covariance::log_det() const { return 2.0 * factor_.diagonal().array().log().sum(); }

double Covariance::max_inverse_eigenvalue() const { return 1.0 / min_eigenvalue(matrix_); }

Gaussian::Gaussian(Vector mean, Covariance covariance) : mean_(std::move(mean)), cov_(std::move(covariance)) {
  check_length(mean_, cov_.dim(), "Gaussian mean");
}

void Gaussian::draw(SeededStream& stream, Eigen::Ref<Vector> out, Eigen::Ref<Vector> scratch) const {
  stream.fill_normal(scratch);
  out.noalias() = cov_.factor().triangularView<Eigen::Lower>() * scratch;
  out += mean_;
}

double mahalanobis_sq(const Vector& x, const Vector& y, const Covariance& sigma) {
  check_length(x, sigma.dim(), "mahalanobis_sq: x");
  check_length(y, sigma.dim(), "mahalanobis_sq: y");
  return sigma.inv_quad(x - y);
}

double mahalanobis_sq(const Vector& x, const Vector& y, const Gaussian& g) {
  return mahalanobis_sq(x, y, g.covariance());
}

Matrix sample(const Gaussian& g, SeededStream& stream, long n) {
  if (n < 1) throw DomainError("sample: n must be >= 1");
  Matrix out(n, g.dim());
  Vector z(g.dim()), x(g.dim());
  for (long i = 0; i < n; ++i) {
    g.draw(stream, x, z);
    out.row(i) = x.transpose();
  }
  return out;
}

double log_likelihood_ratio(const Vector& xi, const Gaussian& g0, const Gaussian& g1) {
  check_length(xi, g0.dim(), "log_likelihood_ratio: xi");
  check_length(g1.mean(), g0.dim(), "log_likelihood_ratio: g1");
  const Matrix& s0 = g0.covariance().matrix();
  const Matrix& s1 = g1.covariance().matrix();
  if ((s0 - s1).norm() > 1e-10 * std::max(1.0, s0.norm())) {
    throw DomainError("log_likelihood_ratio: covariances differ");
  }
  const Covariance& sigma = g0.covariance();
  const Vector w0 = sigma.whiten(g0.mean());
  const Vector w1 = sigma.whiten(g1.mean());
  const Vector wx = sigma.whiten(xi);
  return (w1 - w0).dot(wx) - 0.5 * (w1.squaredNorm() - w0.squaredNorm());
}

double kl_divergence(const Gaussian& ga, const Gaussian& gb) {
  const long d = ga.dim();
  check_length(gb.mean(), d, "kl_divergence");
  const Matrix& la = ga.covariance().factor();
  const Matrix lb_inv_la = gb.covariance().factor().triangularView<Eigen::Lower>().solve(la);
  const double trace_term = lb_inv_la.squaredNorm();
  const double mean_term = gb.covariance().inv_quad(gb.mean() - ga.mean());
  const double kl = 0.5 * (trace_term + mean_term - static_cast<double>(d) + gb.covariance().log_det() -
                           ga.covariance().log_det());
  return std::max(kl, 0.0);
}

}  // namespace rcusum
