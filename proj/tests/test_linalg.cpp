#include "rcusum/errors.hpp"
#include "rcusum/linalg.hpp"
#include "rcusum/random.hpp"

#include <doctest.h>

using namespace rcusum;

namespace {

Matrix random_sym(long d, SeededStream& s) {
  Matrix a(d, d);
  for (long j = 0; j < d; ++j)
    for (long i = 0; i < d; ++i) a(i, j) = s.normal();
  return 0.5 * (a + a.transpose());
}

}  // namespace

TEST_CASE("eigendecomposition is ascending and reconstructs") {
  SeededStream s(1, 0);
  const Matrix a = random_sym(6, s);
  const SymEig e = sym_eig(a);
  for (long i = 1; i < 6; ++i) CHECK(e.values(i - 1) <= e.values(i));
  CHECK((spectral_apply(e, [](double x) { return x; }) - a).norm() < 1e-12);
  CHECK(min_eigenvalue(a) == doctest::Approx(e.values(0)));
  CHECK(max_eigenvalue(a) == doctest::Approx(e.values(5)));
  CHECK(sym_spectral_norm(a) == doctest::Approx(e.values.cwiseAbs().maxCoeff()));
  CHECK(sym_nuclear_norm(a) == doctest::Approx(e.values.cwiseAbs().sum()));
}

TEST_CASE("matrix square roots") {
  SeededStream s(2, 0);
  const Matrix g = random_sym(5, s);
  const Matrix a = g * g + 0.5 * Matrix::Identity(5, 5);
  const Matrix r = psd_sqrt(a);
  CHECK((r * r - a).norm() < 1e-10);
  CHECK((r - r.transpose()).norm() < 1e-12);
  const Matrix ri = pd_inv_sqrt(a);
  CHECK((ri * a * ri - Matrix::Identity(5, 5)).norm() < 1e-10);
  CHECK((psd_sqrt(Matrix::Zero(3, 3))).norm() == 0.0);
}

TEST_CASE("spectral norm of a general matrix") {
  Matrix a(2, 3);
  a << 3, 0, 0, 0, 4, 0;
  CHECK(spectral_norm(a) == doctest::Approx(4.0));
}

TEST_CASE("symmetrization repairs small asymmetry and rejects large") {
  Matrix a = Matrix::Identity(3, 3);
  a(0, 1) = 1e-12;
  CHECK(relative_asymmetry(a) > 0.0);
  const Matrix s = symmetrized(a, "m");
  CHECK(s(0, 1) == s(1, 0));
  a(0, 1) = 0.1;
  CHECK_THROWS_AS(symmetrized(a, "m"), DomainError);
  CHECK_THROWS_AS(symmetrized(Matrix::Zero(2, 3), "m"), DimensionError);
}

TEST_CASE("shape checks") {
  CHECK_NOTHROW(check_square(Matrix::Zero(3, 3), 3, "x"));
  CHECK_THROWS_AS(check_square(Matrix::Zero(3, 3), 2, "x"), DimensionError);
  CHECK_THROWS_AS(check_length(Vector::Zero(4), 3, "v"), DimensionError);
  try {
    check_length(Vector::Zero(4), 3, "v");
  } catch (const DimensionError& e) {
    CHECK(e.expected() == 3);
    CHECK(e.actual() == 4);
  }
  CHECK(same(Vector::Zero(2), Vector::Zero(2)));
  CHECK_FALSE(same(Vector::Zero(2), Vector::Zero(3)));
}
