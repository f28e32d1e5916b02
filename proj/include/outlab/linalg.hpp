#pragma once

#include <cmath>
#include <cstddef>
#include <functional>

#include "outlab/eigen_qr.hpp"
#include "outlab/lu.hpp"
#include "outlab/matrix.hpp"
#include "outlab/rng.hpp"
#include "outlab/svd_jacobi.hpp"

namespace outlab {

// Largest singular value of a linear map given by apply/apply_adjoint pairs,
// by power iteration on A^* A from a fixed pseudorandom start.  Relative
// change below tol twice in a row ends the iteration.
inline double operator_norm_power(const std::function<Vector(const Vector&)>& apply,
                                  const std::function<Vector(const Vector&)>& apply_adjoint,
                                  std::size_t dim, double tol = 1e-6, int max_iters = 500) {
  if (dim == 0) return 0.0;
  Rng r(0x5EEDF00Dull);
  Vector v(dim);
  for (auto& x : v) x = r.gaussian_complex();
  v = normalized(std::move(v));
  // Alternating applies of M and M* drive v toward the top right singular
  // vector, and est = |Mv| climbs to the top singular value at the geometric
  // rate (s2/s1)^2.  Successive increments shrink by roughly that same ratio,
  // so delta * q / (1 - q) estimates the whole remaining tail; stopping on the
  // raw increment alone can quit an order of magnitude early when s2 ~ s1.
  double prev = -1.0;
  double delta_prev = -1.0;
  double est = 0.0;
  for (int it = 0; it < max_iters; ++it) {
    Vector w = apply(v);
    est = norm2(w);
    if (est == 0.0) return 0.0;
    scale(w, Complex(1.0 / est, 0.0));
    Vector u = apply_adjoint(w);
    double nu = norm2(u);
    if (nu == 0.0) return est;
    scale(u, Complex(1.0 / nu, 0.0));
    v = std::move(u);
    if (prev >= 0.0) {
      double delta = std::abs(est - prev);
      if (delta <= tol * est) {
        double tail = 0.0;
        if (delta > 0.0 && delta_prev > 0.0) {
          double q = delta / delta_prev;
          tail = (q < 1.0) ? delta * q / (1.0 - q) : tol * est + 1.0;
        }
        if (tail <= tol * est) return est + tail;
      }
      delta_prev = delta;
    }
    prev = est;
  }
  return est;
}

inline double operator_norm(const Matrix& m, double tol = 1e-6) {
  return operator_norm_power([&m](const Vector& x) { return m.apply(x); },
                             [&m](const Vector& x) { return m.apply_adjoint(x); }, m.cols(),
                             tol);
}

// ||M^m||, applying M (resp. M^*) m times per operator application
inline double power_norm(const Matrix& m, int power, double tol = 1e-6) {
  if (m.rows() != m.cols()) throw invalid_argument_error("power_norm: matrix not square");
  if (power < 1) throw invalid_argument_error("power_norm: power must be >= 1");
  auto fwd = [&m, power](const Vector& x) {
    Vector w = x;
    for (int i = 0; i < power; ++i) w = m.apply(w);
    return w;
  };
  auto adj = [&m, power](const Vector& x) {
    Vector w = x;
    for (int i = 0; i < power; ++i) w = m.apply_adjoint(w);
    return w;
  };
  return operator_norm_power(fwd, adj, m.rows(), tol);
}

// w solving (X/sqrt(n) - z) w = rhs
inline Vector resolvent_solve(const Matrix& x, Complex z, const Vector& rhs) {
  if (x.rows() != x.cols()) throw invalid_argument_error("resolvent_solve: matrix not square");
  const std::size_t n = x.rows();
  if (rhs.size() != n) throw invalid_argument_error("resolvent_solve: dimension mismatch");
  double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix m = x;
  m *= Complex(inv_sqrt_n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) -= z;
  LuFactorization f = lu_factor(std::move(m));
  if (f.singular) throw singular_error("resolvent_solve: z is an eigenvalue of X/sqrt(n)", z);
  return lu_solve(f, rhs);
}

// <(X/sqrt(n))^m u, v> by m successive matrix-vector products
inline Complex bilinear_power(const Matrix& x, int m, const Vector& u, const Vector& v) {
  if (x.rows() != x.cols()) throw invalid_argument_error("bilinear_power: matrix not square");
  if (m < 0) throw invalid_argument_error("bilinear_power: negative power");
  if (u.size() != x.rows() || v.size() != x.rows())
    throw invalid_argument_error("bilinear_power: dimension mismatch");
  double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(x.rows()));
  Vector w = u;
  for (int i = 0; i < m; ++i) {
    w = x.apply(w);
    scale(w, Complex(inv_sqrt_n, 0.0));
  }
  return inner(w, v);
}

}
