#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "outlab/matrix.hpp"

namespace outlab {

// Packed LU with partial pivoting: L (unit diagonal) below, U on and above.
struct LuFactorization {
  Matrix lu;
  std::vector<std::size_t> piv;  // row swapped with i at step i
  int pivot_sign = 1;
  bool singular = false;  // a pivot column fell at or below the singular tolerance
};

// Partial-pivot LU.  With the default singular_tol = 0 only an exactly zero
// pivot column marks the factorization singular, so barely-resolvable shifted
// systems (z close to the spectrum) still factor; pass a small relative
// tolerance to detect rank deficiency up to rounding instead.
inline LuFactorization lu_factor(Matrix m, double singular_tol = 0.0) {
  if (m.rows() != m.cols()) throw invalid_argument_error("lu_factor: matrix not square");
  const std::size_t n = m.rows();
  const double scale = m.max_abs();
  LuFactorization f;
  f.piv.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    double best = std::abs(m(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      double a = std::abs(m(i, k));
      if (a > best) {
        best = a;
        p = i;
      }
    }
    f.piv[k] = p;
    if (p != k) {
      Complex* rk = m.row(k);
      Complex* rp = m.row(p);
      for (std::size_t j = 0; j < n; ++j) std::swap(rk[j], rp[j]);
      f.pivot_sign = -f.pivot_sign;
    }
    Complex pivot = m(k, k);
    if (best <= singular_tol * scale) {
      f.singular = true;
      if (pivot == Complex(0.0, 0.0)) continue;
    }
    Complex inv = 1.0 / pivot;
    for (std::size_t i = k + 1; i < n; ++i) {
      Complex lik = m(i, k) * inv;
      m(i, k) = lik;
      if (lik == Complex(0.0, 0.0)) continue;
      Complex* ri = m.row(i);
      const Complex* rk = m.row(k);
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= lik * rk[j];
    }
  }
  f.lu = std::move(m);
  return f;
}

inline Complex determinant(const LuFactorization& f) {
  if (f.singular) return {0.0, 0.0};
  Complex d(static_cast<double>(f.pivot_sign), 0.0);
  for (std::size_t i = 0; i < f.lu.rows(); ++i) d *= f.lu(i, i);
  return d;
}

// log|det| + i arg(det); safe where the plain product would over/underflow
inline Complex log_determinant(const LuFactorization& f) {
  if (f.singular) throw singular_error("log_determinant: exactly singular factorization");
  double lg = 0.0;
  double ar = (f.pivot_sign < 0) ? 3.14159265358979323846 : 0.0;
  for (std::size_t i = 0; i < f.lu.rows(); ++i) {
    Complex d = f.lu(i, i);
    lg += std::log(std::abs(d));
    ar += std::arg(d);
  }
  return {lg, ar};
}

inline Vector lu_solve(const LuFactorization& f, Vector b) {
  const std::size_t n = f.lu.rows();
  if (b.size() != n) throw invalid_argument_error("lu_solve: dimension mismatch");
  if (f.singular) throw singular_error("lu_solve: singular factorization");
  for (std::size_t k = 0; k < n; ++k)
    if (f.piv[k] != k) std::swap(b[k], b[f.piv[k]]);
  for (std::size_t i = 1; i < n; ++i) {
    const Complex* ri = f.lu.row(i);
    Complex acc = b[i];
    for (std::size_t j = 0; j < i; ++j) acc -= ri[j] * b[j];
    b[i] = acc;
  }
  for (std::size_t ii = n; ii-- > 0;) {
    const Complex* ri = f.lu.row(ii);
    Complex acc = b[ii];
    for (std::size_t j = ii + 1; j < n; ++j) acc -= ri[j] * b[j];
    b[ii] = acc / ri[ii];
  }
  return b;
}

// solve for each column of an n x k right-hand side
inline Matrix lu_solve(const LuFactorization& f, const Matrix& rhs) {
  const std::size_t n = f.lu.rows();
  if (rhs.rows() != n) throw invalid_argument_error("lu_solve: dimension mismatch");
  Matrix x(n, rhs.cols());
  Vector col(n);
  for (std::size_t j = 0; j < rhs.cols(); ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = rhs(i, j);
    Vector sol = lu_solve(f, std::move(col));
    for (std::size_t i = 0; i < n; ++i) x(i, j) = sol[i];
    col = Vector(n);
  }
  return x;
}

}
