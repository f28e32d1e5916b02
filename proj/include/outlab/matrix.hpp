#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "outlab/errors.hpp"

namespace outlab {

using Vector = std::vector<Complex>;

// Dense complex matrix, row-major.
class Matrix {
public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, Complex(0.0, 0.0)) {}

  static Matrix identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  Complex& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const Complex& operator()(std::size_t i, std::size_t j) const { return a_[i * cols_ + j]; }

  Complex* row(std::size_t i) { return a_.data() + i * cols_; }
  const Complex* row(std::size_t i) const { return a_.data() + i * cols_; }

  Matrix adjoint() const {
    Matrix m(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) m(j, i) = std::conj((*this)(i, j));
    return m;
  }

  Matrix& operator+=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }

  Matrix& operator-=(const Matrix& o) {
    require_same_shape(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }

  Matrix& operator*=(Complex s) {
    for (auto& x : a_) x *= s;
    return *this;
  }

  friend Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
  friend Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
  friend Matrix operator*(Matrix a, Complex s) { return a *= s; }
  friend Matrix operator*(Complex s, Matrix a) { return a *= s; }

  friend Matrix operator*(const Matrix& a, const Matrix& b) {
    if (a.cols_ != b.rows_) throw invalid_argument_error("matmul: inner dimensions differ");
    Matrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      Complex* ci = c.row(i);
      const Complex* ai = a.row(i);
      for (std::size_t k = 0; k < a.cols_; ++k) {
        Complex aik = ai[k];
        if (aik == Complex(0.0, 0.0)) continue;
        const Complex* bk = b.row(k);
        for (std::size_t j = 0; j < b.cols_; ++j) ci[j] += aik * bk[j];
      }
    }
    return c;
  }

  Vector apply(const Vector& v) const {
    if (v.size() != cols_) throw invalid_argument_error("apply: dimension mismatch");
    Vector w(rows_, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < rows_; ++i) {
      const Complex* ai = row(i);
      Complex acc(0.0, 0.0);
      for (std::size_t j = 0; j < cols_; ++j) acc += ai[j] * v[j];
      w[i] = acc;
    }
    return w;
  }

  // (M^*) v without forming the adjoint
  Vector apply_adjoint(const Vector& v) const {
    if (v.size() != rows_) throw invalid_argument_error("apply_adjoint: dimension mismatch");
    // Accumulate sum_i a(i,j) * conj(v_i) row by row, then conjugate once at
    // the end; this walks the storage in order and still yields (M* v)_j.
    Vector w(cols_, Complex(0.0, 0.0));
    for (std::size_t i = 0; i < rows_; ++i) {
      const Complex* ai = row(i);
      Complex vi = std::conj(v[i]);
      for (std::size_t j = 0; j < cols_; ++j) w[j] += ai[j] * vi;
    }
    for (auto& x : w) x = std::conj(x);
    return w;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& x : a_) s += std::norm(x);
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  bool all_finite() const {
    for (const auto& x : a_)
      if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
    return true;
  }

private:
  void require_same_shape(const Matrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw invalid_argument_error("matrix shapes differ");
  }

  std::size_t rows_, cols_;
  std::vector<Complex> a_;
};

// <u, v> = sum_i u_i conj(v_i)
inline Complex inner(const Vector& u, const Vector& v) {
  if (u.size() != v.size()) throw invalid_argument_error("inner: dimension mismatch");
  Complex s(0.0, 0.0);
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * std::conj(v[i]);
  return s;
}

inline double norm2(const Vector& v) {
  double s = 0.0;
  for (const auto& x : v) s += std::norm(x);
  return std::sqrt(s);
}

inline void scale(Vector& v, Complex s) {
  for (auto& x : v) x *= s;
}

inline Vector normalized(Vector v) {
  double n = norm2(v);
  if (n == 0.0) throw invalid_argument_error("cannot normalize zero vector");
  scale(v, Complex(1.0 / n, 0.0));
  return v;
}

inline bool all_finite(const Vector& v) {
  for (const auto& x : v)
    if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
  return true;
}

}
