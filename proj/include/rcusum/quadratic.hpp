#pragma once

#include "rcusum/detector.hpp"
#include "rcusum/linalg.hpp"
#include "rcusum/uncertainty.hpp"

#include <functional>
#include <optional>
#include <variant>

namespace rcusum {

// Lifted mean parameterization Z, a convex compact subset of
// {Z >= 0 : Z(d, d) = 1} in S^{d+1}.

// Z = {[u; 1][u; 1]^T}.
struct SingletonMean {
  Vector u;
};

// Support oracle of a general Z: Y -> (max Tr(Z Y), maximizer).
struct GeneralLift {
  long dim;
  std::function<SupportResult(const Matrix& y)> oracle;
};

class MeanLift {
 public:
  using Variant = std::variant<SingletonMean, GeneralLift>;

  explicit MeanLift(Variant v) : v_(std::move(v)) {}
  static MeanLift singleton(Vector u) { return MeanLift(SingletonMean{std::move(u)}); }
  static MeanLift general(long d, std::function<SupportResult(const Matrix&)> oracle) {
    return MeanLift(GeneralLift{d, std::move(oracle)});
  }

  long dim() const;
  const Variant& variant() const noexcept { return v_; }
  const SingletonMean* singleton_mean() const { return std::get_if<SingletonMean>(&v_); }

 private:
  Variant v_;
};

// phi_Z(Y) = max over Z of Tr(Z Y).  Y is (d+1) x (d+1) symmetric.
double phi_support(const MeanLift& z, const Matrix& y);

// (U, Theta*, delta, Z) for one hypothesis class, with cached roots of Theta*.
struct ClassSetup {
  MatrixSet U;
  Matrix theta_star;
  double delta = 0.0;
  MeanLift lift;

  Matrix theta_sqrt;      // Theta*^{1/2}
  Matrix theta_inv_sqrt;  // Theta*^{-1/2}
  Matrix theta_inv;       // Theta*^{-1}

  long dim() const noexcept { return theta_star.rows(); }
};

// Smallest "natural" dominating matrix: the point for a singleton,
// radius * I for a spectral ball, and B + high * V_+ - low * V_- for an
// interval (V_+/V_- the positive / negative parts of V), which coincides
// with the dominating endpoint whenever one exists.
Matrix default_theta_star(const MatrixSet& u);

// Throws DomainError unless Theta* - Theta >= -1e-9 I for every extreme
// member of U; the message names the violating member.
void check_domination(const MatrixSet& u, const Matrix& theta_star);

// delta with ||Theta^{1/2} Theta*^{-1/2} - I|| <= delta on U, clamped to [0, 2].
double compute_delta(const MatrixSet& u, const Matrix& theta_star);

// Validates and caches; Theta* and delta default as above.
ClassSetup make_class_setup(MatrixSet u, MeanLift lift, std::optional<Matrix> theta_star = std::nullopt,
                            std::optional<double> delta = std::nullopt);

// Phi_Z(h, H; Theta) evaluated term by term from its definition.
// Requires ||Theta*^{1/2} H Theta*^{1/2}|| < 1 - 1e-9 and Theta*^{-1} - H > 0.
double eval_phi_big(const Vector& h, const Matrix& H, const Matrix& theta, const ClassSetup& setup);

struct SaddleOptions {
  double beta = 0.99;
  double gap_tol = 1e-4;
  long max_iters = 20000;
};

struct SaddleSolution {
  Vector h_star;
  Matrix H_star;
  Matrix theta0_star;
  Matrix theta1_star;
  double sv = 0.0;     // objective at the returned point (upper bound on the saddle value)
  double gap = 0.0;    // sv minus a certified lower bound
  double epsilon_star = 1.0;  // exp(sv)
  long iterations = 0;
  double smoothing = 0.0;     // smoothing level of the final stage
};

// Minimizes max over Theta0, Theta1 of (Phi_Z0(-h,-H;Theta0) + Phi_Z1(h,H;Theta1))/2
// over H^beta(0) x H^beta(1).  Requires singleton mean lifts.
SaddleSolution solve_saddle(const ClassSetup& setup0, const ClassSetup& setup1, const SaddleOptions& opts = {});

// phi*(xi) = xi^T H* xi / 2 + h*^T xi + (Phi_Z0(-h*,-H*;Theta0*) - Phi_Z1(h*,H*;Theta1*)) / 2.
QuadraticDetector build_quadratic_detector(const SaddleSolution& sol, const ClassSetup& setup0,
                                           const ClassSetup& setup1);

}  // namespace rcusum
