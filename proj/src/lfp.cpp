#include "rcusum/lfp.hpp"

#include "rcusum/errors.hpp"

#include <cassert>
#include <cmath>
#include <sstream>

namespace rcusum {

namespace {

// Looks for a common shift v with mu0 + t v in M0 and mu1 + t v in M1.
bool has_common_shift(const VectorSet& m0, const VectorSet& m1, const Vector& mu0, const Vector& mu1) {
  if (std::holds_alternative<SingletonSet>(m0.variant()) || std::holds_alternative<SingletonSet>(m1.variant())) {
    return false;
  }
  const long d = mu0.size();
  const double t = 1e-5 * (1.0 + std::max(mu0.norm(), mu1.norm()));
  const double tol = 1e-9;
  auto feasible = [&](const Vector& v) {
    return contains(m0, mu0 + t * v, tol) && contains(m1, mu1 + t * v, tol);
  };
  for (long i = 0; i < d; ++i) {
    for (double sgn : {1.0, -1.0}) {
      Vector v = Vector::Zero(d);
      v(i) = sgn;
      if (feasible(v)) return true;
    }
  }
  SeededStream stream(0x5eed, stream_id(StreamDomain::restart, 0));
  for (int k = 0; k < 8; ++k) {
    Vector v(d);
    stream.fill_normal(v);
    v.normalize();
    if (feasible(v) || feasible(-v)) return true;
  }
  return false;
}

}  // namespace

LfpSolution solve_lfp(const VectorSet& m0, const VectorSet& m1, const Covariance& sigma, const LfpOptions& opts) {
  const long d = sigma.dim();
  if (m0.dim() != d) throw DimensionError("solve_lfp: M0", d, m0.dim());
  if (m1.dim() != d) throw DimensionError("solve_lfp: M1", d, m1.dim());

  const double lipschitz = 4.0 * sigma.max_inverse_eigenvalue();
  const double step = 1.0 / lipschitz;

  Vector mu0 = project(m0, Vector::Zero(d));
  Vector mu1 = project(m1, Vector::Zero(d));
  double objective = sigma.inv_quad(mu0 - mu1);

  LfpSolution sol;
  double residual = std::numeric_limits<double>::infinity();
  long iter = 0;
  for (; iter < opts.max_iters; ++iter) {
    const Vector grad0 = 2.0 * sigma.solve(Vector(mu0 - mu1));
    Vector next0 = project(m0, mu0 - step * grad0);
    Vector next1 = project(m1, mu1 + step * grad0);
    residual = std::sqrt((next0 - mu0).squaredNorm() + (next1 - mu1).squaredNorm());
    const double next_objective = sigma.inv_quad(next0 - next1);
    assert(next_objective <= objective + 1e-12 * (1.0 + objective) && "projected gradient must descend");
    mu0 = std::move(next0);
    mu1 = std::move(next1);
    objective = next_objective;
    if (residual <= opts.tol) {
      ++iter;
      break;
    }
  }
  if (residual > opts.tol) {
    std::ostringstream msg;
    msg.precision(17);
    msg << "solve_lfp: no convergence after " << iter << " iterations (residual " << residual
        << ", objective " << objective << ")";
    throw ConvergenceError(msg.str(), residual);
  }

  sol.mu0_star = std::move(mu0);
  sol.mu1_star = std::move(mu1);
  sol.delta_sq = objective;
  sol.epsilon_star = epsilon_from_delta_sq(objective);
  sol.iterations = iter;
  sol.residual = residual;
  sol.degenerate_pair = has_common_shift(m0, m1, sol.mu0_star, sol.mu1_star);
  return sol;
}

AffineDetector build_affine_detector(const LfpSolution& sol, const Covariance& sigma) {
  check_length(sol.mu0_star, sigma.dim(), "build_affine_detector: mu0*");
  check_length(sol.mu1_star, sigma.dim(), "build_affine_detector: mu1*");
  if (sol.delta_sq <= kOverlapThreshold) {
    throw DomainError("uncertainty sets overlap; change undetectable");
  }
  AffineDetector det;
  det.a = -0.5 * sigma.solve(Vector(sol.mu1_star - sol.mu0_star));
  det.c = 0.25 * (sigma.inv_quad(sol.mu1_star) - sigma.inv_quad(sol.mu0_star));
  det.epsilon_star = sol.epsilon_star;
  return det;
}

}  // namespace rcusum
