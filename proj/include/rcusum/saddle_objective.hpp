#pragma once

// Internal machinery of solve_saddle, exposed for tests.

#include "rcusum/quadratic.hpp"

namespace rcusum::detail {

// Objective of the saddle problem after the inner maximization over the
// covariance sets has been carried out exactly.  With mu > 0 every
// nonsmooth spectral piece is replaced by a smooth lower approximation
// (log-sum-exp for the spectral norm, softplus / log-sum-exp for support
// functions), giving a convex minorant that is within O(mu) of the exact
// objective.
class SaddleObjective {
 public:
  SaddleObjective(const ClassSetup& setup0, const ClassSetup& setup1, double beta);

  struct Value {
    double value = 0.0;
    Matrix grad_H;
    Vector grad_h;
  };

  long dim() const noexcept { return d_; }
  double beta() const noexcept { return beta_; }
  // Whether any term needs smoothing.
  bool nonsmooth() const noexcept { return nonsmooth_; }

  // g(h, H) and its (sub)gradient.  mu = 0 gives the exact objective.
  Value joint(const Vector& h, const Matrix& H, double mu) const;

  // Minimizer over h of g(., H); closed form for singleton lifts.
  Vector optimal_h(const Matrix& H) const;

  // G(H) = min_h g(h, H) with gradient by the envelope theorem.
  Value reduced(const Matrix& H, double mu) const;

  // Euclidean projection onto H^beta(0) and H^beta(1) by Dykstra's method
  // over the four half-constraints -beta Theta*^{-1} <= H <= beta Theta*^{-1},
  // finished by a radial pull-back so the result is strictly feasible.
  // normal[k] is the part of y - point attributed to class k.
  struct Projection {
    Matrix point;
    Matrix normal[2];
  };
  Projection project_with_normals(const Matrix& y) const;
  Matrix project(const Matrix& y) const { return project_with_normals(y).point; }
  bool feasible(const Matrix& H, double tol = 1e-12) const;

  // Lower bound on min over the feasible set of <S, H> obtained from the
  // split S = S0 + (S - S0), each part bounded over one class's set.
  double linear_lower_bound(const Matrix& S, const Matrix& S0) const;
  // Best of the two one-sided splits.
  double linear_lower_bound(const Matrix& S) const;

  struct Certificate {
    double exact = 0.0;     // G(H)
    double smoothed = 0.0;  // G_mu(H)
    double linear = 0.0;    // <S, H> minus the lower bound of min <S, .>
    double lower = 0.0;     // smoothed - linear, a lower bound on min G
    double gap = 0.0;       // exact - lower
  };
  // step is the scale used to split the gradient between the classes.
  Certificate certificate(const Matrix& H, double mu, double step) const;

 private:
  struct ClassData {
    const ClassSetup* setup;
    double sign;
    double c_delta;
    Vector u;
  };

  Value class_terms(const ClassData& c, const Vector& h, const Matrix& H, double mu) const;

  ClassData cls_[2];
  long d_;
  double beta_;
  bool nonsmooth_;
};

}  // namespace rcusum::detail
