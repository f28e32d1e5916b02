#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "outlab/linalg.hpp"
#include "outlab/rng.hpp"

using namespace outlab;

namespace {

Matrix random_matrix(std::size_t rows, std::size_t cols, Rng& r) {
  Matrix m(rows, cols);
  for (std::size_t i = 0; i < rows; ++i)
    for (std::size_t j = 0; j < cols; ++j) m(i, j) = r.gaussian_complex();
  return m;
}

}

TEST_CASE("singular values of a diagonal matrix", "[svd]") {
  Matrix d(3, 3);
  d(0, 0) = Complex(0.0, -2.0);
  d(1, 1) = Complex(5.0, 0.0);
  d(2, 2) = Complex(0.3, 0.4);
  auto s = singular_values(d);
  REQUIRE(s.size() == 3);
  REQUIRE(std::abs(s[0] - 5.0) < 1e-12);
  REQUIRE(std::abs(s[1] - 2.0) < 1e-12);
  REQUIRE(std::abs(s[2] - 0.5) < 1e-12);
}

TEST_CASE("product of singular values equals absolute determinant", "[svd]") {
  Rng r = SeedPolicy{30}.stream(0);
  Matrix m = random_matrix(7, 7, r);
  auto s = singular_values(m);
  double prod = 1.0;
  for (double v : s) prod *= v;
  double ad = std::abs(oracle::cofactor_det(oracle::to_dense(m)));
  REQUIRE(std::abs(prod - ad) < 1e-9 * (1.0 + ad));
}

TEST_CASE("adjoint has the same singular values", "[svd]") {
  Rng r = SeedPolicy{31}.stream(0);
  Matrix m = random_matrix(6, 4, r);
  auto s1 = singular_values(m);
  auto s2 = singular_values(m.adjoint());
  REQUIRE(s1.size() == s2.size());
  for (std::size_t i = 0; i < s1.size(); ++i) REQUIRE(std::abs(s1[i] - s2[i]) < 1e-11);
}

TEST_CASE("rank one matrix has one nonzero singular value", "[svd]") {
  Rng r = SeedPolicy{32}.stream(0);
  Vector u(6), v(5);
  for (auto& x : u) x = r.gaussian_complex();
  for (auto& x : v) x = r.gaussian_complex();
  Matrix m(6, 5);
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 5; ++j) m(i, j) = u[i] * std::conj(v[j]);
  auto s = singular_values(m);
  REQUIRE(std::abs(s[0] - norm2(u) * norm2(v)) < 1e-11);
  for (std::size_t i = 1; i < s.size(); ++i) REQUIRE(s[i] < 1e-12 * s[0]);
}

TEST_CASE("tiny singular values keep relative accuracy", "[svd]") {
  Matrix d(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 1e-8;
  d(0, 1) = 0.0;
  d(1, 0) = 0.0;
  auto s = singular_values(d);
  REQUIRE(std::abs(s[1] - 1e-8) < 1e-19);
}

TEST_CASE("operator norm agrees with the largest singular value", "[svd]") {
  Rng r = SeedPolicy{33}.stream(0);
  Matrix m = random_matrix(20, 20, r);
  double tol = 1e-8;
  double via_power = operator_norm(m, tol);
  double via_svd = singular_values(m)[0];
  REQUIRE(std::abs(via_power - via_svd) <= 2.0 * tol * via_svd);
}

TEST_CASE("power norm on a diagonal matrix is exact", "[svd]") {
  Matrix d(3, 3);
  d(0, 0) = Complex(0.0, 1.5);
  d(1, 1) = Complex(-0.5, 0.0);
  d(2, 2) = Complex(0.25, 0.25);
  for (int m = 1; m <= 3; ++m) {
    double got = power_norm(d, m, 1e-10);
    double want = std::pow(1.5, m);
    REQUIRE(std::abs(got - want) < 1e-8 * want);
  }
}

TEST_CASE("resolvent solves with zero matrix and scaled identity", "[svd]") {
  // X = 0: (0 - z)^{-1} rhs = -rhs / z
  Matrix z4(4, 4);
  Vector phi(4, Complex(0.5, 0.0));  // unit ones vector for n = 4
  Vector w = resolvent_solve(z4, Complex(2.0, 0.0), phi);
  for (auto& x : w) REQUIRE(std::abs(x - Complex(-0.25, 0.0)) < 1e-14);

  // X = sqrt(n) I: X/sqrt(n) = I, (I - 3)^{-1} e1 = -e1/2
  const std::size_t n = 3;
  Matrix xi(n, n);
  double root_n = std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) xi(i, i) = root_n;
  Vector e1(n, Complex(0.0, 0.0));
  e1[0] = 1.0;
  Vector w2 = resolvent_solve(xi, Complex(3.0, 0.0), e1);
  REQUIRE(std::abs(w2[0] - Complex(-0.5, 0.0)) < 1e-14);
  REQUIRE(std::abs(w2[1]) < 1e-14);
  REQUIRE(std::abs(w2[2]) < 1e-14);

  // z equal to an eigenvalue must raise
  REQUIRE_THROWS_AS(resolvent_solve(xi, Complex(1.0, 0.0), e1), singular_error);
}

TEST_CASE("bilinear power matches explicit matrix powers", "[svd]") {
  Rng r = SeedPolicy{34}.stream(0);
  const std::size_t n = 6;
  Matrix x = random_matrix(n, n, r);
  Vector u(n), v(n);
  for (auto& t : u) t = r.gaussian_complex();
  for (auto& t : v) t = r.gaussian_complex();

  REQUIRE(std::abs(bilinear_power(x, 0, u, v) - inner(u, v)) < 1e-13);

  double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix m = x;
  m *= Complex(inv_sqrt_n, 0.0);
  Matrix m3 = m * m * m;
  Complex want = inner(m3.apply(u), v);
  REQUIRE(std::abs(bilinear_power(x, 3, u, v) - want) < 1e-12 * (1.0 + std::abs(want)));

  REQUIRE_THROWS_AS(bilinear_power(x, -1, u, v), invalid_argument_error);
}
