#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "outlab/matrix.hpp"

namespace outlab {

// Singular values by one-sided Jacobi: unitary rotations on column pairs
// until all pairs are orthogonal to relative `tol`; the singular values are
// then the column norms.  Works on the adjoint when rows < cols.  Chosen for
// its high relative accuracy on small singular values.
inline std::vector<double> singular_values(const Matrix& m, double tol = 1e-11,
                                           int max_sweeps = 60) {
  Matrix g = (m.rows() >= m.cols()) ? m : m.adjoint();
  const std::size_t rows = g.rows();
  const std::size_t cols = g.cols();
  if (cols == 0) return {};
  // column-major work copy so column ops stream contiguously
  std::vector<Complex> col(rows * cols);
  for (std::size_t j = 0; j < cols; ++j)
    for (std::size_t i = 0; i < rows; ++i) col[j * rows + i] = g(i, j);

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool any = false;
    for (std::size_t p = 0; p + 1 < cols; ++p) {
      for (std::size_t q = p + 1; q < cols; ++q) {
        Complex* gp = col.data() + p * rows;
        Complex* gq = col.data() + q * rows;
        double a = 0.0, b = 0.0;
        Complex c(0.0, 0.0);
        for (std::size_t i = 0; i < rows; ++i) {
          a += std::norm(gp[i]);
          b += std::norm(gq[i]);
          c += std::conj(gp[i]) * gq[i];
        }
        double ac = std::abs(c);
        if (ac <= tol * std::sqrt(a * b) || ac == 0.0) continue;
        any = true;
        // diagonalize the Hermitian pair Gram matrix [[a, c], [conj(c), b]]
        Complex phase = c / ac;
        double zeta = (b - a) / (2.0 * ac);
        double t = ((zeta >= 0.0) ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        double cs = 1.0 / std::sqrt(1.0 + t * t);
        double sn = cs * t;
        Complex sp = sn * phase;
        Complex spc = sn * std::conj(phase);
        for (std::size_t i = 0; i < rows; ++i) {
          Complex x = gp[i], y = gq[i];
          gp[i] = cs * x - spc * y;
          gq[i] = sp * x + cs * y;
        }
      }
    }
    if (!any) {
      std::vector<double> sig(cols);
      for (std::size_t j = 0; j < cols; ++j) {
        double s = 0.0;
        const Complex* gj = col.data() + j * rows;
        for (std::size_t i = 0; i < rows; ++i) s += std::norm(gj[i]);
        sig[j] = std::sqrt(s);
      }
      std::sort(sig.begin(), sig.end(), std::greater<double>());
      return sig;
    }
  }
  throw convergence_error("jacobi svd sweep budget exhausted");
}

}
