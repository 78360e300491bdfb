#pragma once

#include "rcusum/detector.hpp"
#include "rcusum/gaussian.hpp"
#include "rcusum/uncertainty.hpp"

namespace rcusum {

struct LfpOptions {
  double tol = 1e-9;
  long max_iters = 200000;
};

// Closest pair of means in the Sigma^{-1} metric.
struct LfpSolution {
  Vector mu0_star;
  Vector mu1_star;
  double delta_sq = 0.0;      // (mu0* - mu1*)^T Sigma^{-1} (mu0* - mu1*)
  double epsilon_star = 1.0;  // exp(-delta_sq / 8)
  long iterations = 0;
  double residual = 0.0;      // fixed-point gap of the projected step
  // Some common shift keeps both points feasible, so the pair (and the
  // detector offset c) is not unique even though delta_sq is.
  bool degenerate_pair = false;
};

// Projected gradient over (mu0, mu1) with step 1/L, L = 4 lambda_max(Sigma^{-1}),
// started from (project(M0, 0), project(M1, 0)).
LfpSolution solve_lfp(const VectorSet& m0, const VectorSet& m1, const Covariance& sigma,
                      const LfpOptions& opts = {});

// Hellinger affinity exp(-delta_sq / 8) of two equal-covariance Gaussians.
inline double epsilon_from_delta_sq(double delta_sq) { return std::exp(-delta_sq / 8.0); }

constexpr double kOverlapThreshold = 1e-12;

// phi*(xi) = a^T xi + c with a = -Sigma^{-1}(mu1* - mu0*) / 2 and
// c = (mu1*^T Sigma^{-1} mu1* - mu0*^T Sigma^{-1} mu0*) / 4.
// Throws DomainError when the sets overlap (delta_sq <= 1e-12).
AffineDetector build_affine_detector(const LfpSolution& sol, const Covariance& sigma);

}  // namespace rcusum
