#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "oracles.hpp"
#include "outlab/lu.hpp"
#include "outlab/matrix.hpp"
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

TEST_CASE("matmul against identity and adjoint round trip", "[linalg]") {
  Rng r = SeedPolicy{10}.stream(0);
  Matrix m = random_matrix(5, 5, r);
  Matrix i5 = Matrix::identity(5);
  Matrix left = i5 * m;
  Matrix right = m * i5;
  REQUIRE((left - m).frobenius_norm() == 0.0);
  REQUIRE((right - m).frobenius_norm() == 0.0);
  REQUIRE((m.adjoint().adjoint() - m).frobenius_norm() == 0.0);
}

TEST_CASE("apply and apply_adjoint agree through the inner product", "[linalg]") {
  Rng r = SeedPolicy{11}.stream(0);
  Matrix m = random_matrix(7, 5, r);
  Vector x(5), y(7);
  for (auto& v : x) v = r.gaussian_complex();
  for (auto& v : y) v = r.gaussian_complex();
  Complex lhs = inner(m.apply(x), y);
  Complex rhs = inner(x, m.apply_adjoint(y));
  REQUIRE(std::abs(lhs - rhs) < 1e-12);
}

TEST_CASE("lu reconstructs the permuted matrix", "[linalg]") {
  Rng r = SeedPolicy{12}.stream(0);
  Matrix m = random_matrix(8, 8, r);
  LuFactorization f = lu_factor(m);
  REQUIRE_FALSE(f.singular);

  Matrix l = Matrix::identity(8), u(8, 8);
  for (std::size_t i = 0; i < 8; ++i)
    for (std::size_t j = 0; j < 8; ++j) {
      if (j < i)
        l(i, j) = f.lu(i, j);
      else
        u(i, j) = f.lu(i, j);
    }
  Matrix pm = m;
  for (std::size_t k = 0; k < 8; ++k) {
    if (f.piv[k] == k) continue;
    for (std::size_t j = 0; j < 8; ++j) std::swap(pm(k, j), pm(f.piv[k], j));
  }
  REQUIRE((l * u - pm).frobenius_norm() < 1e-12 * (1.0 + m.frobenius_norm()));
}

TEST_CASE("lu determinant matches cofactor expansion", "[linalg]") {
  Rng r = SeedPolicy{13}.stream(0);
  Matrix m = random_matrix(6, 6, r);
  Complex via_lu = determinant(lu_factor(m));
  Complex via_cofactor = oracle::cofactor_det(oracle::to_dense(m));
  REQUIRE(std::abs(via_lu - via_cofactor) < 1e-10 * (1.0 + std::abs(via_cofactor)));

  Complex ld = log_determinant(lu_factor(m));
  Complex rebuilt = std::exp(ld.real()) * Complex(std::cos(ld.imag()), std::sin(ld.imag()));
  REQUIRE(std::abs(rebuilt - via_lu) < 1e-10 * (1.0 + std::abs(via_lu)));
}

TEST_CASE("rank deficient input is flagged at the requested tolerance", "[linalg]") {
  Rng r = SeedPolicy{14}.stream(0);
  Matrix m = random_matrix(5, 5, r);
  // Near-duplicate row: the 1e-13 offset keeps every pivot nonzero in exact
  // arithmetic (so the exact-zero default must not flag it) while staying
  // below the 1e-12 relative tolerance that must.
  for (std::size_t j = 0; j < 5; ++j) m(3, j) = m(1, j) + Complex(1e-13, 0.0);
  REQUIRE_FALSE(lu_factor(m).singular);
  LuFactorization f = lu_factor(m, 1e-12);
  REQUIRE(f.singular);
  REQUIRE(determinant(f) == Complex(0.0, 0.0));
  Vector b(5, Complex(1.0, 0.0));
  REQUIRE_THROWS_AS(lu_solve(f, b), singular_error);

  Matrix z(3, 3);  // a zero column is singular even with the exact default
  z(0, 0) = 1.0;
  z(1, 2) = 2.0;
  z(2, 0) = Complex(0.0, 1.0);
  REQUIRE(lu_factor(z).singular);
}

TEST_CASE("lu solve leaves a small residual", "[linalg]") {
  Rng r = SeedPolicy{15}.stream(0);
  Matrix m = random_matrix(12, 12, r);
  Vector b(12);
  for (auto& v : b) v = r.gaussian_complex();
  Vector x = lu_solve(lu_factor(m), b);
  Vector res = m.apply(x);
  for (std::size_t i = 0; i < 12; ++i) res[i] -= b[i];
  REQUIRE(norm2(res) < 1e-11 * (1.0 + m.frobenius_norm() * norm2(x)));

  Matrix rhs = random_matrix(12, 3, r);
  Matrix sol = lu_solve(lu_factor(m), rhs);
  REQUIRE((m * sol - rhs).frobenius_norm() < 1e-10 * (1.0 + rhs.frobenius_norm()));
}
