#include "rcusum/uncertainty.hpp"

#include "rcusum/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace rcusum {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

bool is_positive_definite(const Matrix& m) {
  Eigen::LLT<Matrix> llt(m);
  return llt.info() == Eigen::Success;
}

}  // namespace

// ---------------------------------------------------------------------------

VectorSet::VectorSet(Variant v) : v_(std::move(v)) {
  dim_ = std::visit(
      overloaded{
          [](const SingletonSet& s) { return static_cast<long>(s.point.size()); },
          [](const L2Ball& b) {
            if (!(b.radius > 0.0)) throw DomainError("l2 ball radius must be > 0");
            return static_cast<long>(b.center.size());
          },
          [](const L1Ball& b) {
            if (!(b.radius > 0.0)) throw DomainError("l1 ball radius must be > 0");
            return static_cast<long>(b.center.size());
          },
          [](const BoxSet& b) {
            check_length(b.upper, b.lower.size(), "box upper bound");
            if ((b.lower.array() > b.upper.array()).any()) throw DomainError("box requires lower <= upper");
            return static_cast<long>(b.lower.size());
          },
      },
      v_);
  if (dim_ < 1) throw DomainError("vector set must have dimension >= 1");
}

std::string VectorSet::kind() const {
  return std::visit(overloaded{[](const SingletonSet&) { return std::string("singleton"); },
                               [](const L2Ball&) { return std::string("l2_ball"); },
                               [](const L1Ball&) { return std::string("l1_ball"); },
                               [](const BoxSet&) { return std::string("box"); }},
                    v_);
}

namespace {

// Euclidean projection of v onto {||v||_1 <= r}; threshold from a full sort.
Vector project_l1(const Vector& v, double r) {
  if (v.lpNorm<1>() <= r) return v;
  std::vector<double> u(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) u[i] = std::abs(v(i));
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t k = 0; k < u.size(); ++k) {
    cumsum += u[k];
    const double t = (cumsum - r) / static_cast<double>(k + 1);
    if (u[k] - t > 0.0) tau = t;
  }
  Vector out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    const double mag = std::max(std::abs(v(i)) - tau, 0.0);
    out(i) = std::copysign(mag, v(i));
  }
  return out;
}

}  // namespace

Vector project(const VectorSet& s, const Vector& x) {
  check_length(x, s.dim(), "project");
  return std::visit(overloaded{
                        [](const SingletonSet& p) -> Vector { return p.point; },
                        [&](const L2Ball& b) -> Vector {
                          const Vector v = x - b.center;
                          const double n = v.norm();
                          if (n <= b.radius) return x;
                          return b.center + (b.radius / n) * v;
                        },
                        [&](const L1Ball& b) -> Vector { return b.center + project_l1(x - b.center, b.radius); },
                        [&](const BoxSet& b) -> Vector { return x.cwiseMax(b.lower).cwiseMin(b.upper); },
                    },
                    s.variant());
}

bool contains(const VectorSet& s, const Vector& x, double tol) {
  check_length(x, s.dim(), "contains");
  return std::visit(overloaded{
                        [&](const SingletonSet& p) { return (x - p.point).norm() <= tol; },
                        [&](const L2Ball& b) { return (x - b.center).norm() <= b.radius + tol; },
                        [&](const L1Ball& b) {
                          if ((x - b.center).lpNorm<1>() <= b.radius) return true;
                          return (x - project(s, x)).norm() <= tol;
                        },
                        [&](const BoxSet&) { return (x - project(s, x)).norm() <= tol; },
                    },
                    s.variant());
}

Vector random_member(const VectorSet& s, SeededStream& stream) {
  const long d = s.dim();
  return std::visit(overloaded{
                        [](const SingletonSet& p) -> Vector { return p.point; },
                        [&](const L2Ball& b) -> Vector {
                          Vector dir(d);
                          stream.fill_normal(dir);
                          const double r = b.radius * std::pow(stream.uniform(), 1.0 / static_cast<double>(d));
                          return b.center + (r / dir.norm()) * dir;
                        },
                        [&](const L1Ball& b) -> Vector {
                          // Uniform on the l1 ball: normalized exponentials with random signs.
                          Vector e(d + 1);
                          for (long i = 0; i <= d; ++i) e(i) = -std::log(stream.uniform());
                          e /= e.sum();
                          Vector out(d);
                          for (long i = 0; i < d; ++i) out(i) = (stream.uniform() < 0.5 ? -1.0 : 1.0) * e(i);
                          return b.center + b.radius * out;
                        },
                        [&](const BoxSet& b) -> Vector {
                          Vector out(d);
                          for (long i = 0; i < d; ++i) out(i) = stream.uniform(b.lower(i), b.upper(i));
                          return out;
                        },
                    },
                    s.variant());
}

// ---------------------------------------------------------------------------

MatrixSet::MatrixSet(Variant v) : v_(std::move(v)) {
  dim_ = std::visit(
      overloaded{
          [](SingletonPsd& s) {
            s.theta = symmetrized(s.theta, "singleton covariance");
            if (s.theta.rows() > 0 && min_eigenvalue(s.theta) < -1e-12) {
              throw DomainError("singleton covariance is not positive semidefinite");
            }
            return static_cast<long>(s.theta.rows());
          },
          [](SpectralBall& b) {
            if (!(b.radius > 0.0)) throw DomainError("spectral ball radius must be > 0");
            return b.dim;
          },
          [](IntervalSet& iv) {
            iv.base = symmetrized(iv.base, "interval base");
            iv.direction = symmetrized(iv.direction, "interval direction");
            check_square(iv.direction, iv.base.rows(), "interval direction");
            if (!(iv.low <= iv.high)) throw DomainError("interval requires low <= high");
            if (!is_positive_definite(iv.base + iv.low * iv.direction) ||
                !is_positive_definite(iv.base + iv.high * iv.direction)) {
              throw DomainError("interval endpoints must be positive definite");
            }
            return static_cast<long>(iv.base.rows());
          },
      },
      v_);
  if (dim_ < 1) throw DomainError("matrix set must have dimension >= 1");
}

std::string MatrixSet::kind() const {
  return std::visit(overloaded{[](const SingletonPsd&) { return std::string("singleton"); },
                               [](const SpectralBall&) { return std::string("spectral_ball"); },
                               [](const IntervalSet&) { return std::string("interval"); }},
                    v_);
}

SupportResult support_linear(const MatrixSet& s, const Matrix& h_in) {
  check_square(h_in, s.dim(), "support_linear");
  const Matrix h = symmetrized(h_in, "support_linear direction");
  return std::visit(overloaded{
                        [&](const SingletonPsd& p) -> SupportResult {
                          return {(p.theta.array() * h.array()).sum(), p.theta};
                        },
                        [&](const SpectralBall& b) -> SupportResult {
                          const SymEig e = sym_eig(h);
                          const long d = s.dim();
                          Matrix proj = Matrix::Zero(d, d);
                          double value = 0.0;
                          for (long i = 0; i < d; ++i) {
                            if (e.values(i) > 1e-12) {
                              value += e.values(i);
                              proj += e.vectors.col(i) * e.vectors.col(i).transpose();
                            }
                          }
                          return {b.radius * value, b.radius * proj};
                        },
                        [&](const IntervalSet& iv) -> SupportResult {
                          const double t = (iv.direction.array() * h.array()).sum();
                          const double sigma = t > 0.0 ? iv.high : iv.low;
                          const double base = (iv.base.array() * h.array()).sum();
                          return {base + sigma * t, iv.base + sigma * iv.direction};
                        },
                    },
                    s.variant());
}

bool contains(const MatrixSet& s, const Matrix& theta_in, double tol) {
  check_square(theta_in, s.dim(), "contains");
  if (relative_asymmetry(theta_in) > 1e-8 && (theta_in - theta_in.transpose()).norm() > tol) return false;
  const Matrix theta = 0.5 * (theta_in + theta_in.transpose());
  return std::visit(overloaded{
                        [&](const SingletonPsd& p) { return (theta - p.theta).norm() <= tol; },
                        [&](const SpectralBall& b) {
                          const Vector ev = sym_eig(theta).values;
                          return ev.minCoeff() >= -tol && ev.maxCoeff() <= b.radius + tol;
                        },
                        [&](const IntervalSet& iv) {
                          const double vv = iv.direction.squaredNorm();
                          double sigma = iv.low;
                          if (vv > 0.0) {
                            sigma = ((theta - iv.base).array() * iv.direction.array()).sum() / vv;
                            sigma = std::clamp(sigma, iv.low, iv.high);
                          }
                          return (theta - iv.base - sigma * iv.direction).norm() <= tol;
                        },
                    },
                    s.variant());
}

Matrix random_member(const MatrixSet& s, SeededStream& stream) {
  const long d = s.dim();
  return std::visit(overloaded{
                        [](const SingletonPsd& p) -> Matrix { return p.theta; },
                        [&](const SpectralBall& b) -> Matrix {
                          // rho A A^T / ||A A^T|| for a Gaussian factor A.
                          Matrix a(d, d);
                          for (long j = 0; j < d; ++j)
                            for (long i = 0; i < d; ++i) a(i, j) = stream.normal();
                          Matrix out = a * a.transpose();
                          out = 0.5 * (out + out.transpose());
                          const double top = Eigen::SelfAdjointEigenSolver<Matrix>(out, Eigen::EigenvaluesOnly)
                                                 .eigenvalues()
                                                 .maxCoeff();
                          return (b.radius / top) * out;
                        },
                        [&](const IntervalSet& iv) -> Matrix {
                          return iv.base + stream.uniform(iv.low, iv.high) * iv.direction;
                        },
                    },
                    s.variant());
}

std::vector<Matrix> extreme_members(const MatrixSet& s) {
  return std::visit(overloaded{
                        [](const SingletonPsd& p) { return std::vector<Matrix>{p.theta}; },
                        [](const SpectralBall& b) {
                          return std::vector<Matrix>{b.radius * Matrix::Identity(b.dim, b.dim)};
                        },
                        [](const IntervalSet& iv) {
                          return std::vector<Matrix>{iv.base + iv.low * iv.direction,
                                                     iv.base + iv.high * iv.direction};
                        },
                    },
                    s.variant());
}

}  // namespace rcusum
