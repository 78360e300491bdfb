#include "rcusum/detector.hpp"

#include "rcusum/errors.hpp"

#include <cmath>

namespace rcusum {

double evaluate(const Detector& det, const Vector& xi) {
  return std::visit([&](const auto& d) { return d(xi); }, det);
}

double epsilon_star(const Detector& det) {
  return std::visit([](const auto& d) { return d.epsilon_star; }, det);
}

long dimension(const Detector& det) {
  return std::visit([](const auto& d) { return d.dim(); }, det);
}

double affine_moment_minus(const AffineDetector& det, const Gaussian& g) {
  check_length(g.mean(), det.dim(), "affine_moment_minus");
  const Vector la = g.covariance().factor().transpose() * det.a;
  return std::exp(-det.a.dot(g.mean()) - det.c + 0.5 * la.squaredNorm());
}

double affine_moment_plus(const AffineDetector& det, const Gaussian& g) {
  check_length(g.mean(), det.dim(), "affine_moment_plus");
  const Vector la = g.covariance().factor().transpose() * det.a;
  return std::exp(det.a.dot(g.mean()) + det.c + 0.5 * la.squaredNorm());
}

AffineDetector likelihood_ratio_affine(const Gaussian& g0, const Gaussian& g1) {
  check_length(g1.mean(), g0.dim(), "likelihood_ratio_affine");
  const Covariance& sigma = g0.covariance();
  if ((sigma.matrix() - g1.covariance().matrix()).norm() > 1e-10 * std::max(1.0, sigma.matrix().norm())) {
    throw DomainError("likelihood_ratio_affine: covariances differ");
  }
  AffineDetector det;
  det.a = -sigma.solve(Vector(g1.mean() - g0.mean()));
  det.c = 0.5 * (sigma.inv_quad(g1.mean()) - sigma.inv_quad(g0.mean()));
  return det;
}

QuadraticDetector likelihood_ratio_quadratic(const Gaussian& g0, const Gaussian& g1) {
  const long d = g0.dim();
  check_length(g1.mean(), d, "likelihood_ratio_quadratic");
  const Matrix eye = Matrix::Identity(d, d);
  const Matrix p0 = g0.covariance().solve(eye);
  const Matrix p1 = g1.covariance().solve(eye);
  QuadraticDetector det;
  det.H = 0.5 * ((p1 - p0) + (p1 - p0).transpose());
  det.h = -(g1.covariance().solve(g1.mean()) - g0.covariance().solve(g0.mean()));
  det.kappa_const = 0.5 * (g1.covariance().inv_quad(g1.mean()) - g0.covariance().inv_quad(g0.mean())) +
                    0.5 * (g1.covariance().log_det() - g0.covariance().log_det());
  return det;
}

}  // namespace rcusum
