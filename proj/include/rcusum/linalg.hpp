#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace rcusum {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Eigendecomposition of a symmetric matrix; eigenvalues ascending.
struct SymEig {
  Vector values;
  Matrix vectors;
};

SymEig sym_eig(const Matrix& a);

// Relative asymmetry ||A - A^T||_F / max(||A||_F, tiny).
double relative_asymmetry(const Matrix& a);

// Returns (A + A^T)/2; throws DomainError (naming `what`) when the relative
// asymmetry exceeds `tol`, or DimensionError when A is not square.
Matrix symmetrized(const Matrix& a, std::string_view what, double tol = 1e-8);

// f applied to the eigenvalues of a symmetric matrix.
template <typename F>
Matrix spectral_apply(const SymEig& e, F&& f) {
  Vector mapped = e.values.unaryExpr(std::forward<F>(f));
  return e.vectors * mapped.asDiagonal() * e.vectors.transpose();
}

// Principal square root of a symmetric PSD matrix (negative eigenvalues
// are clamped to zero).
Matrix psd_sqrt(const Matrix& a);

// Inverse principal square root of a symmetric PD matrix.
Matrix pd_inv_sqrt(const Matrix& a);

// max |lambda| of a symmetric matrix.
double sym_spectral_norm(const Matrix& a);

// sum |lambda| of a symmetric matrix.
double sym_nuclear_norm(const Matrix& a);

// Largest singular value of a general matrix.
double spectral_norm(const Matrix& a);

double min_eigenvalue(const Matrix& a);
double max_eigenvalue(const Matrix& a);

// Exact equality including shape.
template <typename A, typename B>
bool same(const A& a, const B& b) {
  return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
}

void check_square(const Matrix& a, long d, std::string_view what);
void check_length(const Vector& v, long d, std::string_view what);

}  // namespace rcusum
