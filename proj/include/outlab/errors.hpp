#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace outlab {

using Complex = std::complex<double>;

class error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

// Bad sizes, ranks, or parameter values caught before any numerics run.
class invalid_argument_error : public error {
public:
  using error::error;
};

// An exactly singular pivot; `where` is the shift z when one was involved.
class singular_error : public error {
public:
  singular_error(const std::string& msg, Complex where_ = {0.0, 0.0})
      : error(msg), where(where_) {}
  Complex where;
};

// Iteration budget exhausted; carries whatever eigenvalues had already
// deflated so callers can inspect the partial result.
class convergence_error : public error {
public:
  convergence_error(const std::string& msg, std::vector<Complex> partial_ = {})
      : error(msg), partial(std::move(partial_)) {}
  std::vector<Complex> partial;
};

// A contour either passes through (or numerically too near) a zero of the
// integrand, or could not be refined to slow phase variation.
class contour_error : public error {
public:
  using error::error;
};

// Evaluation requested outside the region where the object is certified
// (truncated series below its certified radius, pole at the origin, ...).
class region_error : public error {
public:
  using error::error;
};

class io_error : public error {
public:
  using error::error;
};

}
