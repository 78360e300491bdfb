#include "rcusum/quadratic.hpp"

#include "rcusum/errors.hpp"
#include "rcusum/saddle_objective.hpp"

#include <Eigen/Cholesky>

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

namespace rcusum {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

Matrix sym(const Matrix& a) { return 0.5 * (a + a.transpose()); }

bool is_scalar_multiple_of_identity(const Matrix& a) {
  const long d = a.rows();
  const double c = a.trace() / static_cast<double>(d);
  return (a - c * Matrix::Identity(d, d)).norm() <= 1e-12 * std::max(1.0, a.norm());
}

double member_delta(const Matrix& theta, const Matrix& theta_inv_sqrt) {
  const long d = theta.rows();
  return spectral_norm(psd_sqrt(theta) * theta_inv_sqrt - Matrix::Identity(d, d));
}

double log_det_pd(const Matrix& a, const char* what) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw DomainError(std::string(what) + ": matrix is not positive definite");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

// Smooth lower approximation of a support function and its gradient.
struct Smoothed {
  double value;
  Matrix grad;
};

double softplus(double x, double mu) {
  return x > 0 ? x + mu * std::log1p(std::exp(-x / mu)) : mu * std::log1p(std::exp(x / mu));
}

double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

Smoothed smoothed_support(const MatrixSet& u, const Matrix& y, double mu) {
  if (mu <= 0.0) {
    SupportResult r = support_linear(u, y);
    return {r.value, std::move(r.argmax)};
  }
  return std::visit(
      overloaded{
          [&](const SingletonPsd& s) -> Smoothed { return {inner(s.theta, y), s.theta}; },
          [&](const SpectralBall& s) -> Smoothed {
            const SymEig e = sym_eig(y);
            double value = 0.0;
            Vector w(e.values.size());
            for (long i = 0; i < e.values.size(); ++i) {
              value += softplus(e.values(i), mu) - mu * std::log(2.0);
              w(i) = logistic(e.values(i) / mu);
            }
            return {s.radius * value, s.radius * (e.vectors * w.asDiagonal() * e.vectors.transpose())};
          },
          [&](const IntervalSet& s) -> Smoothed {
            const double tau = inner(s.direction, y);
            const double a = s.low * tau;
            const double b = s.high * tau;
            const double m = std::max(a, b);
            const double ea = std::exp((a - m) / mu);
            const double eb = std::exp((b - m) / mu);
            const double z = ea + eb;
            const double value = inner(s.base, y) + m + mu * std::log(z) - mu * std::log(2.0);
            const double sigma = (ea * s.low + eb * s.high) / z;
            return {value, s.base + sigma * s.direction};
          },
      },
      u.variant());
}

// Spectral norm of a symmetric matrix from its eigenpairs, smoothed by
// log-sum-exp over +-lambda when mu > 0; returns value and gradient.
Smoothed smoothed_spectral_norm(const SymEig& e, double mu) {
  const long d = e.values.size();
  long k = 0;
  double m = 0.0;
  for (long i = 0; i < d; ++i) {
    if (std::abs(e.values(i)) > m) {
      m = std::abs(e.values(i));
      k = i;
    }
  }
  if (mu <= 0.0) {
    const double s = e.values(k) >= 0 ? 1.0 : -1.0;
    return {m, s * e.vectors.col(k) * e.vectors.col(k).transpose()};
  }
  Vector w(d);
  double z = 0.0;
  for (long i = 0; i < d; ++i) {
    const double p = std::exp((e.values(i) - m) / mu);
    const double n = std::exp((-e.values(i) - m) / mu);
    z += p + n;
    w(i) = p - n;
  }
  w /= z;
  const double value = m + mu * std::log(z) - mu * std::log(2.0 * static_cast<double>(d));
  return {value, e.vectors * w.asDiagonal() * e.vectors.transpose()};
}

Matrix positive_part(const Matrix& a) {
  return spectral_apply(sym_eig(a), [](double x) { return std::max(x, 0.0); });
}

}  // namespace

long MeanLift::dim() const {
  return std::visit(overloaded{[](const SingletonMean& s) { return static_cast<long>(s.u.size()); },
                               [](const GeneralLift& g) { return g.dim; }},
                    v_);
}

double phi_support(const MeanLift& z, const Matrix& y) {
  const long d = z.dim();
  check_square(y, d + 1, "phi_support: Y");
  return std::visit(overloaded{[&](const SingletonMean& s) {
                                 Vector zz(d + 1);
                                 zz << s.u, 1.0;
                                 return zz.dot(y * zz);
                               },
                               [&](const GeneralLift& g) { return g.oracle(y).value; }},
                    z.variant());
}

Matrix default_theta_star(const MatrixSet& u) {
  return std::visit(overloaded{
                        [](const SingletonPsd& s) -> Matrix { return s.theta; },
                        [](const SpectralBall& s) -> Matrix { return s.radius * Matrix::Identity(s.dim, s.dim); },
                        [](const IntervalSet& s) -> Matrix {
                          const SymEig e = sym_eig(s.direction);
                          const Matrix vp = spectral_apply(e, [](double x) { return std::max(x, 0.0); });
                          const Matrix vn = spectral_apply(e, [](double x) { return std::max(-x, 0.0); });
                          return sym(s.base + s.high * vp - s.low * vn);
                        },
                    },
                    u.variant());
}

void check_domination(const MatrixSet& u, const Matrix& theta_star) {
  const std::vector<Matrix> members = extreme_members(u);
  for (std::size_t i = 0; i < members.size(); ++i) {
    const double lmin = min_eigenvalue(sym(theta_star - members[i]));
    if (lmin < -1e-9) {
      std::ostringstream msg;
      msg << "Theta* does not dominate " << u.kind() << " member " << i << " (min eigenvalue of Theta* - Theta is "
          << lmin << ")";
      throw DomainError(msg.str());
    }
  }
}

double compute_delta(const MatrixSet& u, const Matrix& theta_star) {
  check_square(theta_star, u.dim(), "compute_delta: Theta*");
  const Matrix w = pd_inv_sqrt(theta_star);
  const double delta = std::visit(
      overloaded{
          [&](const SingletonPsd& s) { return same(s.theta, theta_star) ? 0.0 : member_delta(s.theta, w); },
          [&](const SpectralBall& s) {
            // Members approach 0, where the deviation is exactly 1.
            if (!is_scalar_multiple_of_identity(theta_star)) return 2.0;
            const double c = theta_star(0, 0);
            return std::max(1.0, std::abs(std::sqrt(s.radius / c) - 1.0));
          },
          [&](const IntervalSet& s) {
            auto f = [&](double sigma) { return member_delta(s.base + sigma * s.direction, w); };
            const int n = 64;
            const double step = (s.high - s.low) / n;
            int best = 0;
            double best_value = -1.0;
            for (int i = 0; i <= n; ++i) {
              const double v = f(s.low + i * step);
              if (v > best_value) {
                best_value = v;
                best = i;
              }
            }
            if (step <= 0.0) return best_value;
            double lo = s.low + std::max(best - 1, 0) * step;
            double hi = s.low + std::min(best + 1, n) * step;
            const double ratio = 0.5 * (std::sqrt(5.0) - 1.0);
            double x1 = hi - ratio * (hi - lo);
            double x2 = lo + ratio * (hi - lo);
            double f1 = f(x1), f2 = f(x2);
            for (int it = 0; it < 60 && hi - lo > 1e-12 * (1.0 + std::abs(hi)); ++it) {
              if (f1 > f2) {
                hi = x2;
                x2 = x1;
                f2 = f1;
                x1 = hi - ratio * (hi - lo);
                f1 = f(x1);
              } else {
                lo = x1;
                x1 = x2;
                f1 = f2;
                x2 = lo + ratio * (hi - lo);
                f2 = f(x2);
              }
            }
            return std::max({best_value, f1, f2});
          },
      },
      u.variant());
  return std::clamp(delta, 0.0, 2.0);
}

ClassSetup make_class_setup(MatrixSet u, MeanLift lift, std::optional<Matrix> theta_star,
                            std::optional<double> delta) {
  const long d = u.dim();
  if (lift.dim() != d) throw DimensionError("make_class_setup: mean lift", d, lift.dim());
  Matrix ts = theta_star ? symmetrized(*theta_star, "make_class_setup: Theta*") : default_theta_star(u);
  check_square(ts, d, "make_class_setup: Theta*");
  if (Eigen::LLT<Matrix>(ts).info() != Eigen::Success) {
    throw DomainError("make_class_setup: Theta* must be positive definite");
  }
  check_domination(u, ts);
  double dv = delta ? *delta : compute_delta(u, ts);
  if (!std::isfinite(dv) || dv < 0.0 || dv > 2.0) {
    throw DomainError("make_class_setup: delta must lie in [0, 2]");
  }
  Matrix root = psd_sqrt(ts);
  Matrix inv_root = pd_inv_sqrt(ts);
  Matrix inv = sym(inv_root * inv_root);
  return ClassSetup{std::move(u), std::move(ts), dv, std::move(lift), std::move(root), std::move(inv_root),
                    std::move(inv)};
}

double eval_phi_big(const Vector& h, const Matrix& H, const Matrix& theta, const ClassSetup& setup) {
  const long d = setup.dim();
  check_length(h, d, "eval_phi_big: h");
  check_square(H, d, "eval_phi_big: H");
  check_square(theta, d, "eval_phi_big: Theta");
  const Matrix eye = Matrix::Identity(d, d);
  const Matrix x = sym(setup.theta_sqrt * H * setup.theta_sqrt);
  const double norm_x = sym_spectral_norm(x);
  if (norm_x >= 1.0 - 1e-9) {
    throw DomainError("eval_phi_big: ||Theta*^{1/2} H Theta*^{1/2}|| must be below 1");
  }
  const Matrix a = sym(setup.theta_inv - H);
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) throw DomainError("eval_phi_big: Theta*^{-1} - H is not positive definite");

  const double t1 = -0.5 * log_det_pd(eye - x, "eval_phi_big");
  const double t2 = 0.5 * inner(theta - setup.theta_star, H);
  const double t3 = setup.delta * (2.0 + setup.delta) / (2.0 * (1.0 - norm_x)) * x.squaredNorm();

  Matrix m(d, d + 1);
  m << H, h;
  Matrix y = Matrix::Zero(d + 1, d + 1);
  y.topLeftCorner(d, d) = H;
  y.topRightCorner(d, 1) = h;
  y.bottomLeftCorner(1, d) = h.transpose();
  y += m.transpose() * llt.solve(m);
  const double t4 = 0.5 * phi_support(setup.lift, sym(y));
  return t1 + t2 + t3 + t4;
}

namespace detail {

SaddleObjective::SaddleObjective(const ClassSetup& setup0, const ClassSetup& setup1, double beta)
    : d_(setup0.dim()), beta_(beta) {
  if (!(beta > 0.0 && beta < 1.0)) throw DomainError("solve_saddle: beta must lie in (0, 1)");
  if (setup1.dim() != d_) throw DimensionError("solve_saddle: class 1", d_, setup1.dim());
  const ClassSetup* setups[2] = {&setup0, &setup1};
  nonsmooth_ = false;
  for (int k = 0; k < 2; ++k) {
    const SingletonMean* sm = setups[k]->lift.singleton_mean();
    if (sm == nullptr) {
      throw DomainError("solve_saddle: only singleton mean lifts are supported by the solver");
    }
    const double delta = setups[k]->delta;
    cls_[k] = ClassData{setups[k], k == 0 ? -1.0 : 1.0, 0.5 * delta * (2.0 + delta), sm->u};
    if (cls_[k].c_delta > 0.0 || !std::holds_alternative<SingletonPsd>(setups[k]->U.variant())) {
      nonsmooth_ = true;
    }
  }
}

SaddleObjective::Value SaddleObjective::class_terms(const ClassData& c, const Vector& h, const Matrix& H,
                                                    double mu) const {
  const ClassSetup& s = *c.setup;
  const Matrix& r = s.theta_sqrt;
  const Matrix x = sym(c.sign * (r * H * r));
  const SymEig e = sym_eig(x);
  const double lmax = e.values.cwiseAbs().maxCoeff();
  if (lmax >= 1.0 - 1e-12) throw DomainError("saddle objective: point outside the log-det domain");

  const Vector inv1m = (1.0 - e.values.array()).inverse().matrix();
  const Matrix ainv = sym(r * (e.vectors * inv1m.asDiagonal() * e.vectors.transpose()) * r);

  Value v;
  v.value = -0.5 * (-e.values.array()).log1p().sum();
  v.grad_H = 0.5 * c.sign * ainv;

  const Smoothed sup = smoothed_support(s.U, c.sign * H, mu);
  v.value += 0.5 * (sup.value - c.sign * inner(s.theta_star, H));
  v.grad_H += 0.5 * c.sign * (sup.grad - s.theta_star);

  if (c.c_delta > 0.0) {
    const double f = e.values.squaredNorm();
    const Smoothed t = smoothed_spectral_norm(e, mu);
    const double denom = 1.0 - t.value;
    v.value += c.c_delta * f / denom;
    const Matrix grad_x = c.c_delta * (2.0 * x / denom + f / (denom * denom) * t.grad);
    v.grad_H += c.sign * (r * grad_x * r);
  }

  const Vector& u = c.u;
  const Vector w = H * u + h;
  const Vector z = ainv * w;
  v.value += 0.5 * (c.sign * (u.dot(H * u) + 2.0 * h.dot(u)) + w.dot(z));
  v.grad_H += 0.5 * (c.sign * u * u.transpose() + z * u.transpose() + u * z.transpose() + c.sign * z * z.transpose());
  v.grad_h = c.sign * u + z;
  return v;
}

SaddleObjective::Value SaddleObjective::joint(const Vector& h, const Matrix& H, double mu) const {
  check_length(h, d_, "saddle objective: h");
  check_square(H, d_, "saddle objective: H");
  Value a = class_terms(cls_[0], h, H, mu);
  const Value b = class_terms(cls_[1], h, H, mu);
  a.value = 0.5 * (a.value + b.value);
  a.grad_H = sym(0.5 * (a.grad_H + b.grad_H));
  a.grad_h = 0.5 * (a.grad_h + b.grad_h);
  return a;
}

Vector SaddleObjective::optimal_h(const Matrix& H) const {
  Matrix lhs = Matrix::Zero(d_, d_);
  Vector rhs = Vector::Zero(d_);
  const Matrix eye = Matrix::Identity(d_, d_);
  for (const ClassData& c : cls_) {
    Eigen::LLT<Matrix> llt(sym(c.setup->theta_inv - c.sign * H));
    if (llt.info() != Eigen::Success) throw DomainError("saddle objective: Theta*^{-1} - H is not positive definite");
    const Matrix ainv = llt.solve(eye);
    lhs += ainv;
    rhs -= c.sign * c.u + ainv * (H * c.u);
  }
  return Eigen::LLT<Matrix>(sym(lhs)).solve(rhs);
}

SaddleObjective::Value SaddleObjective::reduced(const Matrix& H, double mu) const {
  return joint(optimal_h(H), H, mu);
}


SaddleObjective::Projection SaddleObjective::project_with_normals(const Matrix& y) const {
  Projection out;
  out.normal[0] = Matrix::Zero(d_, d_);
  out.normal[1] = Matrix::Zero(d_, d_);
  Matrix x = sym(y);
  if (feasible(x, 0.0)) {
    out.point = std::move(x);
    return out;
  }
  // Half-set i belongs to class i / 2; even i is the upper bound.
  Matrix bound[2] = {beta_ * cls_[0].setup->theta_inv, beta_ * cls_[1].setup->theta_inv};
  Matrix p[4] = {Matrix::Zero(d_, d_), Matrix::Zero(d_, d_), Matrix::Zero(d_, d_), Matrix::Zero(d_, d_)};
  for (int cycle = 0; cycle < 500; ++cycle) {
    const Matrix prev = x;
    for (int i = 0; i < 4; ++i) {
      const Matrix& c = bound[i / 2];
      const Matrix z = x + p[i];
      Matrix next = (i % 2 == 0) ? Matrix(z - positive_part(z - c)) : Matrix(z + positive_part(-c - z));
      p[i] = z - next;
      x = std::move(next);
    }
    if ((x - prev).norm() <= 1e-13 * (1.0 + x.norm())) break;
  }
  double t = 1.0;
  for (const ClassData& c : cls_) {
    const double n = sym_spectral_norm(sym(c.setup->theta_sqrt * x * c.setup->theta_sqrt));
    if (n > beta_) t = std::min(t, beta_ / n);
  }
  out.point = sym(t * x);
  out.normal[0] = p[0] + p[1];
  out.normal[1] = p[2] + p[3];
  return out;
}

bool SaddleObjective::feasible(const Matrix& H, double tol) const {
  for (const ClassData& c : cls_) {
    if (sym_spectral_norm(sym(c.setup->theta_sqrt * H * c.setup->theta_sqrt)) > beta_ + tol) return false;
  }
  return true;
}

double SaddleObjective::linear_lower_bound(const Matrix& S, const Matrix& S0) const {
  const Matrix parts[2] = {S0, S - S0};
  double bound = 0.0;
  for (int k = 0; k < 2; ++k) {
    const Matrix& w = cls_[k].setup->theta_inv_sqrt;
    bound -= beta_ * sym_nuclear_norm(sym(w * parts[k] * w));
  }
  return bound;
}

double SaddleObjective::linear_lower_bound(const Matrix& S) const {
  return std::max(linear_lower_bound(S, S), linear_lower_bound(S, Matrix::Zero(d_, d_)));
}

SaddleObjective::Certificate SaddleObjective::certificate(const Matrix& H, double mu, double step) const {
  Certificate c;
  const Value smooth = reduced(H, mu);
  c.smoothed = smooth.value;
  c.exact = mu > 0.0 ? reduced(H, 0.0).value : smooth.value;
  const Matrix& s = smooth.grad_H;
  double bound = linear_lower_bound(s);
  const Projection pr = project_with_normals(H - step * s);
  bound = std::max(bound, linear_lower_bound(s, Matrix(-pr.normal[0] / step)));
  c.linear = std::max(0.0, inner(s, H) - bound);
  c.lower = c.smoothed - c.linear;
  c.gap = std::max(0.0, c.exact - c.lower);
  return c;
}

}  // namespace detail

SaddleSolution solve_saddle(const ClassSetup& setup0, const ClassSetup& setup1, const SaddleOptions& opts) {
  using detail::SaddleObjective;
  const SaddleObjective obj(setup0, setup1, opts.beta);
  const long d = obj.dim();
  constexpr double kMuStart = 1e-2;
  constexpr double kMuMin = 1e-10;
  constexpr std::size_t kMemory = 10;

  double mu = obj.nonsmooth() ? kMuStart : 0.0;
  Matrix H = Matrix::Zero(d, d);
  SaddleObjective::Value cur = obj.reduced(H, mu);
  double lambda = 1.0 / std::max(cur.grad_H.norm(), 1e-12);
  std::deque<double> history{cur.value};

  double best_upper = std::numeric_limits<double>::infinity();
  double best_lower = -std::numeric_limits<double>::infinity();
  Matrix best_H = H;
  long iter = 0;
  bool converged = false;

  auto certify = [&] {
    const SaddleObjective::Certificate c = obj.certificate(H, mu, lambda);
    if (c.exact < best_upper) {
      best_upper = c.exact;
      best_H = H;
    }
    best_lower = std::max(best_lower, c.lower);
    converged = best_upper - best_lower <= opts.gap_tol;
    return c;
  };
  auto refine = [&] {
    mu = std::max(mu * 0.1, kMuMin);
    cur = obj.reduced(H, mu);
    history.assign(1, cur.value);
  };

  while (iter < opts.max_iters) {
    bool stalled = false;
    const Matrix dir = obj.project(H - lambda * cur.grad_H) - H;
    const double slope = inner(cur.grad_H, dir);
    if (dir.norm() <= 1e-15 * (1.0 + H.norm()) || slope >= 0.0) stalled = true;

    if (!stalled) {
      const double ref = *std::max_element(history.begin(), history.end());
      double alpha = 1.0;
      SaddleObjective::Value next;
      Matrix candidate;
      while (true) {
        candidate = H + alpha * dir;
        next = obj.reduced(candidate, mu);
        if (next.value <= ref + 1e-4 * alpha * slope) break;
        if (alpha < 1e-12) {
          stalled = true;
          break;
        }
        const double trial = -0.5 * alpha * alpha * slope / (next.value - cur.value - alpha * slope);
        alpha = (trial >= 0.1 * alpha && trial <= 0.9 * alpha) ? trial : 0.5 * alpha;
      }
      if (!stalled) {
        const Matrix step = candidate - H;
        const double sy = inner(step, next.grad_H - cur.grad_H);
        lambda = sy > 0.0 ? std::clamp(step.squaredNorm() / sy, 1e-10, 1e10) : 1e10;
        H = std::move(candidate);
        cur = std::move(next);
        history.push_back(cur.value);
        if (history.size() > kMemory) history.pop_front();
      }
    }
    ++iter;

    if (stalled || iter % 10 == 0) {
      const SaddleObjective::Certificate c = certify();
      if (converged) break;
      if (mu > 0.0 && (stalled || c.linear <= 0.5 * (c.exact - c.smoothed))) {
        if (mu <= kMuMin && stalled) break;
        refine();
      } else if (stalled) {
        break;
      }
    }
  }
  if (!converged) certify();
  const double gap = std::max(0.0, best_upper - best_lower);
  if (!converged) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "solve_saddle: duality gap " << gap << " above tolerance " << opts.gap_tol << " after " << iter
        << " iterations (objective " << best_upper << ")";
    throw ConvergenceError(msg.str(), gap);
  }

  SaddleSolution sol;
  sol.H_star = best_H;
  sol.h_star = obj.optimal_h(best_H);
  sol.theta0_star = support_linear(setup0.U, Matrix(-best_H)).argmax;
  sol.theta1_star = support_linear(setup1.U, best_H).argmax;
  sol.sv = best_upper;
  sol.gap = gap;
  sol.epsilon_star = std::exp(best_upper);
  sol.iterations = iter;
  sol.smoothing = mu;
  return sol;
}

QuadraticDetector build_quadratic_detector(const SaddleSolution& sol, const ClassSetup& setup0,
                                           const ClassSetup& setup1) {
  const long d = setup0.dim();
  check_length(sol.h_star, d, "build_quadratic_detector: h*");
  check_square(sol.H_star, d, "build_quadratic_detector: H*");
  if (setup1.dim() != d) throw DimensionError("build_quadratic_detector: class 1", d, setup1.dim());
  const Vector neg_h = -sol.h_star;
  const Matrix neg_H = -sol.H_star;
  QuadraticDetector det;
  det.H = sol.H_star;
  det.h = sol.h_star;
  det.kappa_const = 0.5 * (eval_phi_big(neg_h, neg_H, sol.theta0_star, setup0) -
                           eval_phi_big(sol.h_star, sol.H_star, sol.theta1_star, setup1));
  det.epsilon_star = sol.epsilon_star;
  return det;
}

}  // namespace rcusum
