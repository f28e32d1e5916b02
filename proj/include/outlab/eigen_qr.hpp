#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "outlab/matrix.hpp"

namespace outlab {

// Diagonal similarity scaling with exact powers of two (EISPACK-style).
// Eigenvalues are untouched; row/column norms are brought to comparable size
// so later rounding errors are measured against a sane scale.
inline void balance_in_place(Matrix& a) {
  const std::size_t n = a.rows();
  bool changed = true;
  int passes = 0;
  while (changed && passes++ < 50) {
    changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      double r = 0.0, c = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        if (j == i) continue;
        r += std::abs(a(i, j));
        c += std::abs(a(j, i));
      }
      if (r == 0.0 || c == 0.0) continue;
      double f = 1.0;
      double s = c + r;
      double g = r / 2.0;
      while (c < g) {
        f *= 2.0;
        c *= 4.0;
      }
      g = r * 2.0;
      while (c >= g) {
        f /= 2.0;
        c /= 4.0;
      }
      if ((c + r) / f < 0.95 * s && f != 1.0) {
        changed = true;
        double inv = 1.0 / f;
        for (std::size_t j = 0; j < n; ++j) a(i, j) *= inv;
        for (std::size_t j = 0; j < n; ++j) a(j, i) *= f;
      }
    }
  }
}

// Householder reduction to upper Hessenberg form, H = Q^* A Q.  Reflector
// tails live below the subdiagonal, coefficients in tau; both are kept so Q
// can still be applied to vectors and blocks.
struct HessenbergForm {
  Matrix h;  // Hessenberg part on/above subdiagonal, reflector tails below
  std::vector<double> tau;

  std::size_t size() const { return h.rows(); }

  // clean copy of H with the storage tails zeroed
  Matrix hessenberg_matrix() const {
    const std::size_t n = h.rows();
    Matrix m = h;
    for (std::size_t j = 0; j + 2 < n; ++j)
      for (std::size_t i = j + 2; i < n; ++i) m(i, j) = Complex(0.0, 0.0);
    return m;
  }

  // x <- Q^* x (reflectors applied in elimination order)
  void apply_q_star(Vector& x) const {
    const std::size_t n = h.rows();
    if (x.size() != n) throw invalid_argument_error("apply_q_star: dimension mismatch");
    for (std::size_t k = 0; k + 2 < n; ++k) {
      if (tau[k] == 0.0) continue;
      Complex w = x[k + 1];
      for (std::size_t i = k + 2; i < n; ++i) w += std::conj(h(i, k)) * x[i];
      w *= tau[k];
      x[k + 1] -= w;
      for (std::size_t i = k + 2; i < n; ++i) x[i] -= w * h(i, k);
    }
  }

  // x <- Q x (reverse order; each reflector is Hermitian)
  void apply_q(Vector& x) const {
    const std::size_t n = h.rows();
    if (x.size() != n) throw invalid_argument_error("apply_q: dimension mismatch");
    for (std::size_t kk = n; kk-- > 2;) {
      std::size_t k = kk - 2;
      if (tau[k] == 0.0) continue;
      Complex w = x[k + 1];
      for (std::size_t i = k + 2; i < n; ++i) w += std::conj(h(i, k)) * x[i];
      w *= tau[k];
      x[k + 1] -= w;
      for (std::size_t i = k + 2; i < n; ++i) x[i] -= w * h(i, k);
    }
  }

  // B <- Q^* B, columns transformed independently
  void apply_q_star_left(Matrix& b) const {
    const std::size_t n = h.rows();
    if (b.rows() != n) throw invalid_argument_error("apply_q_star_left: dimension mismatch");
    Vector col(n);
    for (std::size_t j = 0; j < b.cols(); ++j) {
      for (std::size_t i = 0; i < n; ++i) col[i] = b(i, j);
      apply_q_star(col);
      for (std::size_t i = 0; i < n; ++i) b(i, j) = col[i];
    }
  }

  // B <- B Q, rows transformed independently: (B Q)^* = Q^* B^*
  void apply_q_right(Matrix& b) const {
    const std::size_t n = h.rows();
    if (b.cols() != n) throw invalid_argument_error("apply_q_right: dimension mismatch");
    Vector row(n);
    for (std::size_t i = 0; i < b.rows(); ++i) {
      for (std::size_t j = 0; j < n; ++j) row[j] = std::conj(b(i, j));
      apply_q_star(row);
      for (std::size_t j = 0; j < n; ++j) b(i, j) = std::conj(row[j]);
    }
  }
};

inline HessenbergForm hessenberg_reduce(Matrix a) {
  if (a.rows() != a.cols()) throw invalid_argument_error("hessenberg_reduce: matrix not square");
  const std::size_t n = a.rows();
  HessenbergForm f;
  f.tau.assign(n > 2 ? n - 2 : 0, 0.0);
  std::vector<Complex> v(n), w(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    // reflector annihilating column k below the subdiagonal
    double mu2 = 0.0;
    for (std::size_t i = k + 1; i < n; ++i) mu2 += std::norm(a(i, k));
    double mu = std::sqrt(mu2);
    Complex alpha = a(k + 1, k);
    double tail = mu2 - std::norm(alpha);
    if (mu == 0.0 || tail <= 0.0) {
      f.tau[k] = 0.0;
      continue;
    }
    Complex phase = (alpha == Complex(0.0, 0.0)) ? Complex(1.0, 0.0) : alpha / std::abs(alpha);
    Complex beta = -phase * mu;
    Complex w0 = alpha - beta;  // |w0| = |alpha| + mu, no cancellation
    double t = (std::abs(alpha) + mu) / mu;
    v[k + 1] = Complex(1.0, 0.0);
    for (std::size_t i = k + 2; i < n; ++i) v[i] = a(i, k) / w0;

    // left update, rows k+1..n-1, columns k..n-1
    for (std::size_t j = k; j < n; ++j) w[j] = Complex(0.0, 0.0);
    for (std::size_t i = k + 1; i < n; ++i) {
      Complex vi = std::conj(v[i]);
      const Complex* ri = a.row(i);
      for (std::size_t j = k; j < n; ++j) w[j] += vi * ri[j];
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      Complex tv = t * v[i];
      Complex* ri = a.row(i);
      for (std::size_t j = k; j < n; ++j) ri[j] -= tv * w[j];
    }

    // right update, all rows, columns k+1..n-1
    for (std::size_t i = 0; i < n; ++i) {
      const Complex* ri = a.row(i);
      Complex acc(0.0, 0.0);
      for (std::size_t j = k + 1; j < n; ++j) acc += ri[j] * v[j];
      w[i] = acc;
    }
    for (std::size_t i = 0; i < n; ++i) {
      Complex tw = t * w[i];
      Complex* ri = a.row(i);
      for (std::size_t j = k + 1; j < n; ++j) ri[j] -= tw * std::conj(v[j]);
    }

    a(k + 1, k) = beta;
    for (std::size_t i = k + 2; i < n; ++i) a(i, k) = v[i];  // storage tail
    f.tau[k] = t;
  }
  f.h = std::move(a);
  return f;
}

namespace detail {

struct Givens {
  double c;
  Complex s;
  Complex r;
};

// unitary [[c, s], [-conj(s), c]] with c real mapping (f,g) -> (r,0)
inline Givens make_givens(Complex f, Complex g) {
  Givens gv;
  if (g == Complex(0.0, 0.0)) {
    gv.c = 1.0;
    gv.s = Complex(0.0, 0.0);
    gv.r = f;
    return gv;
  }
  if (f == Complex(0.0, 0.0)) {
    gv.c = 0.0;
    gv.s = std::conj(g) / std::abs(g);
    gv.r = std::abs(g);
    return gv;
  }
  double af = std::abs(f), ag = std::abs(g);
  double d = std::hypot(af, ag);
  Complex fs = f / af;
  gv.c = af / d;
  gv.s = fs * std::conj(g) / d;
  gv.r = fs * d;
  return gv;
}

inline void rotate_rows(Matrix& h, std::size_t i1, std::size_t i2, std::size_t j0,
                        std::size_t j1, const Givens& g) {
  Complex* r1 = h.row(i1);
  Complex* r2 = h.row(i2);
  Complex cs = std::conj(g.s);
  for (std::size_t j = j0; j <= j1; ++j) {
    Complex a = r1[j], b = r2[j];
    r1[j] = g.c * a + g.s * b;
    r2[j] = -cs * a + g.c * b;
  }
}

inline void rotate_cols(Matrix& h, std::size_t j1c, std::size_t j2c, std::size_t i0,
                        std::size_t i1, const Givens& g) {
  Complex cs = std::conj(g.s);
  for (std::size_t i = i0; i <= i1; ++i) {
    Complex* ri = h.row(i);
    Complex a = ri[j1c], b = ri[j2c];
    ri[j1c] = g.c * a + cs * b;
    ri[j2c] = -g.s * a + g.c * b;
  }
}

inline void eig2x2(Complex a, Complex b, Complex c, Complex d, Complex& l1, Complex& l2) {
  Complex m = 0.5 * (a + d);
  Complex det = a * d - b * c;
  Complex q = std::sqrt(m * m - det);
  Complex p1 = m + q, p2 = m - q;
  if (std::abs(p1) < std::abs(p2)) std::swap(p1, p2);
  l1 = p1;
  l2 = (p1 == Complex(0.0, 0.0)) ? p2 : det / p1;
}

}

// Eigenvalues of an upper Hessenberg matrix by single-shift QR with Wilkinson
// shifts, absolute deflation threshold `thresh`, and an exceptional shift
// after every 10 sweeps that fail to deflate.  Iteration budget is
// max_sweeps; exceeding it raises convergence_error carrying the eigenvalues
// deflated so far.
inline std::vector<Complex> eigenvalues_of_hessenberg(Matrix h, double thresh, long max_sweeps) {
  const std::size_t n = h.rows();
  std::vector<Complex> out;
  out.reserve(n);
  if (n == 0) return out;
  if (n == 1) {
    out.push_back(h(0, 0));
    return out;
  }
  const double ulp = 2.220446049250313e-16;
  long iters = 0;
  int stagnant = 0;
  std::size_t hi = n - 1;
  while (true) {
    // deflate trailing converged part
    while (true) {
      if (hi == 0) {
        out.push_back(h(0, 0));
        return out;
      }
      double local = 2.0 * ulp * (std::abs(h(hi - 1, hi - 1)) + std::abs(h(hi, hi)));
      if (std::abs(h(hi, hi - 1)) <= std::max(thresh, local)) {
        out.push_back(h(hi, hi));
        --hi;
        stagnant = 0;
        continue;
      }
      break;
    }
    // find the active window [lo, hi]
    std::size_t lo = hi;
    while (lo > 0) {
      double local = 2.0 * ulp * (std::abs(h(lo - 1, lo - 1)) + std::abs(h(lo, lo)));
      if (std::abs(h(lo, lo - 1)) <= std::max(thresh, local)) {
        h(lo, lo - 1) = Complex(0.0, 0.0);
        break;
      }
      --lo;
    }
    if (lo == hi) continue;  // picked up next round by the deflation scan
    if (lo + 1 == hi) {
      Complex l1, l2;
      detail::eig2x2(h(lo, lo), h(lo, hi), h(hi, lo), h(hi, hi), l1, l2);
      out.push_back(l1);
      out.push_back(l2);
      if (lo == 0) return out;
      hi = lo - 1;
      stagnant = 0;
      continue;
    }
    if (iters++ >= max_sweeps)
      throw convergence_error("qr iteration budget exhausted", out);

    // shift
    Complex sigma;
    if (stagnant > 0 && stagnant % 10 == 0) {
      sigma = h(hi, hi) + Complex(1.5, -0.4375) * std::abs(h(hi, hi - 1));
    } else {
      Complex l1, l2;
      detail::eig2x2(h(hi - 1, hi - 1), h(hi - 1, hi), h(hi, hi - 1), h(hi, hi), l1, l2);
      sigma = (std::abs(l1 - h(hi, hi)) < std::abs(l2 - h(hi, hi))) ? l1 : l2;
    }
    ++stagnant;

    // implicit single-shift sweep on [lo, hi]
    detail::Givens g = detail::make_givens(h(lo, lo) - sigma, h(lo + 1, lo));
    detail::rotate_rows(h, lo, lo + 1, lo, hi, g);
    detail::rotate_cols(h, lo, lo + 1, lo, std::min(hi, lo + 2), g);
    for (std::size_t k = lo + 1; k < hi; ++k) {
      g = detail::make_givens(h(k, k - 1), h(k + 1, k - 1));
      h(k, k - 1) = g.r;
      h(k + 1, k - 1) = Complex(0.0, 0.0);
      detail::rotate_rows(h, k, k + 1, k, hi, g);
      detail::rotate_cols(h, k, k + 1, lo, std::min(hi, k + 2), g);
    }
  }
}

// Dense path: balance, reduce to Hessenberg, run shifted QR.  `tol` sets the
// deflation threshold relative to ||M||_F; each deflation perturbs the matrix
// by at most that much, so the returned values satisfy
// sigma_min(M - lambda) <~ tol * ||M||_F.
inline std::vector<Complex> eigenvalues(const Matrix& m, double tol = 1e-10) {
  if (m.rows() != m.cols()) throw invalid_argument_error("eigenvalues: matrix not square");
  const std::size_t n = m.rows();
  if (n == 0) return {};
  if (!m.all_finite()) throw invalid_argument_error("eigenvalues: non-finite entries");
  Matrix a = m;
  balance_in_place(a);
  // Deflation tolerance is relative to the *balanced* matrix, the one the
  // sweeps actually run on; the input norm can be off by the full diagonal
  // scaling spread.
  double scale = a.frobenius_norm();
  if (scale == 0.0) return std::vector<Complex>(n, Complex(0.0, 0.0));
  double thresh = tol * scale / (4.0 * std::sqrt(static_cast<double>(n)));
  HessenbergForm f = hessenberg_reduce(std::move(a));
  return eigenvalues_of_hessenberg(f.hessenberg_matrix(), thresh, 30L * static_cast<long>(n));
}

// LU of (H - z) for upper Hessenberg H with adjacent-row pivoting; O(n^2)
// factor, O(n^2) per solve.  Reuses its workspace across shifts, so one
// instance serves many z values but must stay confined to one thread.
class ShiftedHessenbergSolver {
public:
  explicit ShiftedHessenbergSolver(Matrix hessenberg)
      : h_(std::move(hessenberg)), n_(h_.rows()), w_(n_, n_), mult_(n_), swapped_(n_, 0) {
    if (h_.rows() != h_.cols())
      throw invalid_argument_error("ShiftedHessenbergSolver: matrix not square");
  }

  const Matrix& hessenberg() const { return h_; }

  void factor(Complex z) {
    // copy the Hessenberg band of H - z
    for (std::size_t i = 0; i < n_; ++i) {
      const Complex* src = h_.row(i);
      Complex* dst = w_.row(i);
      std::size_t j0 = (i == 0) ? 0 : i - 1;
      for (std::size_t j = j0; j < n_; ++j) dst[j] = src[j];
      dst[i] -= z;
    }
    log_det_ = Complex(0.0, 0.0);
    for (std::size_t k = 0; k < n_; ++k) {
      Complex* rk = w_.row(k);
      swapped_[k] = 0;
      mult_[k] = Complex(0.0, 0.0);
      if (k + 1 < n_) {
        Complex* rn = w_.row(k + 1);
        if (std::abs(rn[k]) > std::abs(rk[k])) {
          for (std::size_t j = k; j < n_; ++j) std::swap(rk[j], rn[j]);
          swapped_[k] = 1;
          log_det_ += Complex(0.0, 3.14159265358979323846);
        }
        if (rk[k] == Complex(0.0, 0.0)) throw singular_error("shifted Hessenberg factor: zero pivot", z);
        Complex mk = rn[k] / rk[k];
        mult_[k] = mk;
        rn[k] = Complex(0.0, 0.0);
        if (mk != Complex(0.0, 0.0))
          for (std::size_t j = k + 1; j < n_; ++j) rn[j] -= mk * rk[j];
      } else if (rk[k] == Complex(0.0, 0.0)) {
        throw singular_error("shifted Hessenberg factor: zero pivot", z);
      }
      log_det_ += Complex(std::log(std::abs(rk[k])), std::arg(rk[k]));
    }
  }

  // log det(H - z) for the last factored shift
  Complex log_det() const { return log_det_; }

  // b <- (H - z)^{-1} b for the last factored shift
  void solve_in_place(Vector& b) const {
    if (b.size() != n_) throw invalid_argument_error("solve_in_place: dimension mismatch");
    for (std::size_t k = 0; k + 1 < n_; ++k) {
      if (swapped_[k]) std::swap(b[k], b[k + 1]);
      b[k + 1] -= mult_[k] * b[k];
    }
    for (std::size_t ii = n_; ii-- > 0;) {
      const Complex* ri = w_.row(ii);
      Complex acc = b[ii];
      for (std::size_t j = ii + 1; j < n_; ++j) acc -= ri[j] * b[j];
      b[ii] = acc / ri[ii];
    }
  }

private:
  Matrix h_;
  std::size_t n_;
  Matrix w_;
  std::vector<Complex> mult_;
  std::vector<std::uint8_t> swapped_;
  Complex log_det_ = Complex(0.0, 0.0);
};

}
