#include "rcusum/errors.hpp"
#include "rcusum/gaussian.hpp"

#include <doctest.h>

#include <cmath>

using namespace rcusum;

namespace {

Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<long>(xs.size()));
  long i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Matrix random_spd(long d, SeededStream& s) {
  Matrix a(d, d);
  for (long j = 0; j < d; ++j)
    for (long i = 0; i < d; ++i) a(i, j) = s.normal();
  return a * a.transpose() / d + 0.3 * Matrix::Identity(d, d);
}

}  // namespace

TEST_CASE("covariance factor reconstructs sigma") {
  SeededStream s(3, 0);
  const Matrix m = random_spd(6, s);
  const Covariance c(m);
  const Matrix& l = c.factor();
  CHECK((l * l.transpose() - m).norm() / m.norm() < 1e-10);
  CHECK(l.diagonal().minCoeff() > 0.0);
  CHECK(c.log_det() == doctest::Approx(std::log(m.determinant())).epsilon(1e-10));
  const Vector v = vec({1, -2, 0.5, 3, 0, 1});
  CHECK((m * c.solve(v) - v).norm() < 1e-10);
  CHECK(c.inv_quad(v) == doctest::Approx(v.dot(m.ldlt().solve(v))).epsilon(1e-10));
}

TEST_CASE("covariance rejects non-PD and asymmetric input") {
  CHECK_THROWS_AS(Covariance(Matrix::Zero(1, 1)), DomainError);
  Matrix m = Matrix::Identity(2, 2);
  m(0, 0) = -1;
  CHECK_THROWS_AS(Covariance{m}, DomainError);
  Matrix a = Matrix::Identity(2, 2);
  a(0, 1) = 0.5;
  CHECK_THROWS_AS(Covariance{a}, DomainError);
  CHECK_THROWS_AS(Covariance(Matrix(0, 0)), Error);
}

TEST_CASE("mahalanobis examples") {
  const Gaussian g = Gaussian::standard(2);
  CHECK(mahalanobis_sq(vec({3, 4}), vec({0, 0}), g) == doctest::Approx(25.0));
  CHECK(mahalanobis_sq(vec({1.5, -2}), vec({1.5, -2}), g) == 0.0);
  const Covariance d(Matrix(vec({4, 1}).asDiagonal()));
  CHECK(mahalanobis_sq(vec({2, 1}), vec({0, 0}), d) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK_THROWS_AS(mahalanobis_sq(vec({1, 2, 3}), vec({0, 0}), d), DimensionError);
}

TEST_CASE("mahalanobis is symmetric and Euclidean under identity") {
  SeededStream s(4, 0);
  const Covariance c(random_spd(5, s));
  const Covariance id = Covariance::identity(5);
  for (int k = 0; k < 100; ++k) {
    Vector x(5), y(5);
    s.fill_normal(x);
    s.fill_normal(y);
    CHECK(mahalanobis_sq(x, y, c) == mahalanobis_sq(y, x, c));
    CHECK(std::abs(mahalanobis_sq(x, y, id) - (x - y).squaredNorm()) <= 1e-12 * (1 + (x - y).squaredNorm()));
  }
}

TEST_CASE("sampling is deterministic and matches the first two moments") {
  SeededStream s0(5, 0);
  const Matrix m = random_spd(4, s0);
  const Gaussian g(vec({1, -1, 0.5, 2}), m);
  SeededStream a(10, 1), b(10, 1);
  const Matrix xa = sample(g, a, 1000000);
  const Matrix xb = sample(g, b, 10);
  CHECK(same(Matrix(xa.topRows(10)), xb));
  const Vector mean = xa.colwise().mean();
  const Matrix centered = xa.rowwise() - mean.transpose();
  const Matrix cov = centered.transpose() * centered / (xa.rows() - 1);
  CHECK((cov - m).norm() / m.norm() < 0.02);
  for (long i = 0; i < 4; ++i) CHECK(std::abs(mean(i) - g.mean()(i)) < 4.0 * std::sqrt(m(i, i) / 1e6));
}

TEST_CASE("standard sample mean within the CLT bound") {
  SeededStream s(6, 0);
  const Matrix x = sample(Gaussian::standard(3), s, 100000);
  const Vector mean = x.colwise().mean();
  for (long i = 0; i < 3; ++i) CHECK(std::abs(mean(i)) < 4.0 / std::sqrt(1e5));
}

TEST_CASE("log-likelihood ratio examples") {
  const Gaussian g0(vec({0}), Matrix::Identity(1, 1));
  const Gaussian g1(vec({2}), Matrix::Identity(1, 1));
  CHECK(log_likelihood_ratio(vec({1}), g0, g1) == doctest::Approx(0.0));
  CHECK(log_likelihood_ratio(vec({2}), g0, g1) == doctest::Approx(2.0));
  const Gaussian h0 = Gaussian::standard(2);
  const Gaussian h1(vec({1, 1}), Matrix::Identity(2, 2));
  CHECK(log_likelihood_ratio(vec({0, 0}), h0, h1) == doctest::Approx(-1.0));
}

TEST_CASE("kl divergence examples and nonnegativity") {
  const Gaussian a = Gaussian::standard(2);
  CHECK(kl_divergence(a, a) == doctest::Approx(0.0));
  const Gaussian g0(vec({0}), Matrix::Identity(1, 1));
  const Gaussian g1(vec({2}), Matrix::Identity(1, 1));
  CHECK(kl_divergence(g0, g1) == doctest::Approx(2.0));
  const Gaussian b(Vector::Zero(2), Matrix(2.0 * Matrix::Identity(2, 2)));
  CHECK(kl_divergence(a, b) == doctest::Approx(0.5 * (1.0 - 2.0 + 2.0 * std::log(2.0))).epsilon(1e-12));
  SeededStream s(7, 0);
  for (int k = 0; k < 50; ++k) {
    Vector m1(3), m2(3);
    s.fill_normal(m1);
    s.fill_normal(m2);
    const Gaussian p(m1, random_spd(3, s)), q(m2, random_spd(3, s));
    CHECK(kl_divergence(p, q) >= 0.0);
  }
}
