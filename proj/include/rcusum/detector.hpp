#pragma once

#include "rcusum/gaussian.hpp"
#include "rcusum/linalg.hpp"

#include <limits>
#include <variant>

namespace rcusum {

// phi(xi) = a^T xi + c.  For the least-favorable pair this is -L*/2, so
// the CUSUM increment -phi is half the log-likelihood ratio.
struct AffineDetector {
  Vector a;
  double c = 0.0;
  // Certified bound on both exponential moments; NaN when the detector
  // carries no certificate (plain likelihood-ratio baselines).
  double epsilon_star = std::numeric_limits<double>::quiet_NaN();

  long dim() const noexcept { return a.size(); }
  double operator()(const Vector& xi) const { return a.dot(xi) + c; }
};

// phi(xi) = xi^T H xi / 2 + h^T xi + kappa_const.
struct QuadraticDetector {
  Matrix H;
  Vector h;
  double kappa_const = 0.0;
  double epsilon_star = std::numeric_limits<double>::quiet_NaN();

  long dim() const noexcept { return h.size(); }
  double operator()(const Vector& xi) const { return 0.5 * xi.dot(H * xi) + h.dot(xi) + kappa_const; }
};

using Detector = std::variant<AffineDetector, QuadraticDetector>;

double evaluate(const Detector& det, const Vector& xi);
inline double increment(const Detector& det, const Vector& xi) { return -evaluate(det, xi); }
double epsilon_star(const Detector& det);
long dimension(const Detector& det);

// E[exp(-phi(xi))] and E[exp(+phi(xi))] for xi ~ N(mu, Sigma), closed form.
double affine_moment_minus(const AffineDetector& det, const Gaussian& g);
double affine_moment_plus(const AffineDetector& det, const Gaussian& g);

// Classic CUSUM detectors: phi = -log(p1/p0) so that the increment -phi is
// the full log-likelihood ratio.  The affine form requires equal covariances.
AffineDetector likelihood_ratio_affine(const Gaussian& g0, const Gaussian& g1);
QuadraticDetector likelihood_ratio_quadratic(const Gaussian& g0, const Gaussian& g1);

}  // namespace rcusum
