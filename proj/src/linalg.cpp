#include "rcusum/linalg.hpp"

#include "rcusum/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace rcusum {

SymEig sym_eig(const Matrix& a) {
  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) throw DomainError("symmetric eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

double relative_asymmetry(const Matrix& a) {
  const double scale = std::max(a.norm(), std::numeric_limits<double>::min());
  return (a - a.transpose()).norm() / scale;
}

Matrix symmetrized(const Matrix& a, std::string_view what, double tol) {
  if (a.rows() != a.cols()) throw DimensionError(std::string(what) + " must be square", a.rows(), a.cols());
  const double asym = relative_asymmetry(a);
  if (asym > tol) {
    throw DomainError(std::string(what) + " is not symmetric (relative asymmetry " +
                      std::to_string(asym) + ")");
  }
  return 0.5 * (a + a.transpose());
}

Matrix psd_sqrt(const Matrix& a) {
  return spectral_apply(sym_eig(a), [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

Matrix pd_inv_sqrt(const Matrix& a) {
  const SymEig e = sym_eig(a);
  if (e.values.minCoeff() <= 0.0) throw DomainError("matrix is not positive definite");
  return spectral_apply(e, [](double x) { return 1.0 / std::sqrt(x); });
}

double sym_spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Vector v = sym_eig(a).values;
  return std::max(std::abs(v(0)), std::abs(v(v.size() - 1)));
}

double sym_nuclear_norm(const Matrix& a) { return sym_eig(a).values.cwiseAbs().sum(); }

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

double min_eigenvalue(const Matrix& a) { return sym_eig(a).values.minCoeff(); }
double max_eigenvalue(const Matrix& a) { return sym_eig(a).values.maxCoeff(); }

void check_square(const Matrix& a, long d, std::string_view what) {
  if (a.rows() != d) throw DimensionError(std::string(what), d, a.rows());
  if (a.cols() != d) throw DimensionError(std::string(what), d, a.cols());
}

void check_length(const Vector& v, long d, std::string_view what) {
  if (v.size() != d) throw DimensionError(std::string(what), d, v.size());
}

}  // namespace rcusum
