#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <utility>

#include "outlab/matrix.hpp"
#include "outlab/rng.hpp"

namespace outlab {

// Entry distribution for the iid matrix: mean zero, unit variance in every
// case.  uniform_bounded defaults to the half-width sqrt(3), the unique
// symmetric uniform law with variance one.
struct AtomDistribution {
  enum class Kind { rademacher, gaussian_real, gaussian_complex, uniform_bounded };

  Kind kind = Kind::gaussian_complex;
  double bound = 1.7320508075688772;  // sqrt(3), used by uniform_bounded only

  static AtomDistribution rademacher() { return {Kind::rademacher, 1.0}; }
  static AtomDistribution gaussian_real() { return {Kind::gaussian_real, 1.0}; }
  static AtomDistribution gaussian_complex() { return {Kind::gaussian_complex, 1.0}; }
  static AtomDistribution uniform_bounded(double b = 1.7320508075688772) {
    if (!(b > 0.0)) throw invalid_argument_error("uniform_bounded: bound must be positive");
    return {Kind::uniform_bounded, b};
  }

  Complex draw(Rng& r) const {
    switch (kind) {
      case Kind::rademacher: return {r.rademacher(), 0.0};
      case Kind::gaussian_real: return {r.gaussian(), 0.0};
      case Kind::gaussian_complex: return r.gaussian_complex();
      case Kind::uniform_bounded: return {r.uniform_symmetric(bound), 0.0};
    }
    return {0.0, 0.0};
  }

  const char* name() const {
    switch (kind) {
      case Kind::rademacher: return "rademacher";
      case Kind::gaussian_real: return "gaussian_real";
      case Kind::gaussian_complex: return "gaussian_complex";
      case Kind::uniform_bounded: return "uniform_bounded";
    }
    return "?";
  }
};

inline AtomDistribution atom_from_name(const std::string& s) {
  if (s == "rademacher") return AtomDistribution::rademacher();
  if (s == "gaussian_real") return AtomDistribution::gaussian_real();
  if (s == "gaussian_complex") return AtomDistribution::gaussian_complex();
  if (s == "uniform_bounded") return AtomDistribution::uniform_bounded();
  throw invalid_argument_error("unknown atom distribution: " + s);
}

// Unnormalized n x n iid draw; callers divide by sqrt(n) where the scaled
// operator is meant.  Entries are filled row-major from the (trial, tag 0)
// stream, so the draw is a pure function of (master_seed, trial).
inline Matrix sample_iid_matrix(std::size_t n, const AtomDistribution& atom,
                                const SeedPolicy& seed, std::uint64_t trial) {
  if (n == 0) throw invalid_argument_error("sample_iid_matrix: dimension must be positive");
  Rng r = seed.stream(trial, 0);
  Matrix x(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    Complex* row = x.row(i);
    for (std::size_t j = 0; j < n; ++j) row[j] = atom.draw(r);
  }
  return x;
}

// The unit vector with all coordinates equal: every entry 1/sqrt(n).
inline Vector unit_ones_vector(std::size_t n) {
  if (n == 0) throw invalid_argument_error("unit_ones_vector: dimension must be positive");
  return Vector(n, Complex(1.0 / std::sqrt(static_cast<double>(n)), 0.0));
}

// Factor pair with A*B equal to diag(leading[0..k-1], 0, ..., 0).  A holds the
// first k standard basis columns, B = diag(leading) times the matching basis
// rows, so the eigenvalue payload lives entirely in B.
inline std::pair<Matrix, Matrix> low_rank_from_diag(std::size_t n,
                                                    const std::vector<Complex>& leading) {
  const std::size_t k = leading.size();
  if (k > n) throw invalid_argument_error("low_rank_from_diag: rank exceeds dimension");
  Matrix a(n, k), b(k, n);
  for (std::size_t i = 0; i < k; ++i) {
    a(i, i) = 1.0;
    b(i, i) = leading[i];
  }
  return {std::move(a), std::move(b)};
}

// Rank-one mean shift mu*sqrt(n) phi phi*, split as A = mu*sqrt(n)*phi (every
// entry mu) and B = phi* (every entry 1/sqrt(n)).  The single nonzero
// eigenvalue is the trace, mu*sqrt(n).
inline std::pair<Matrix, Matrix> mean_shift_factors(std::size_t n, Complex mu) {
  if (n == 0) throw invalid_argument_error("mean_shift_factors: dimension must be positive");
  Matrix a(n, 1), b(1, n);
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = mu;
    b(0, i) = inv_sqrt_n;
  }
  return {std::move(a), std::move(b)};
}

// Rank-one model with a random right factor: A = mu*sqrt(n)*phi as above, and
// B = psi* where sqrt(n)*psi takes the value sqrt((1-p)/p) with probability p
// and -sqrt(p/(1-p)) otherwise.  Both branches give psi mean zero and
// n*E|psi_j|^2 = 1, matching the deterministic phi in scale.  Drawn from the
// (trial, tag 1) stream so it never collides with the matrix entries.
inline std::pair<Matrix, Matrix> balanced_two_point_factors(std::size_t n, double mu, double p,
                                                            const SeedPolicy& seed,
                                                            std::uint64_t trial) {
  if (n == 0)
    throw invalid_argument_error("balanced_two_point_factors: dimension must be positive");
  if (!(p > 0.0 && p < 1.0))
    throw invalid_argument_error("balanced_two_point_factors: p must lie strictly inside (0,1)");
  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double up = std::sqrt((1.0 - p) / p);
  const double down = -std::sqrt(p / (1.0 - p));
  Rng r = seed.stream(trial, 1);
  Matrix a(n, 1), b(1, n);
  for (std::size_t i = 0; i < n; ++i) {
    a(i, 0) = mu;
    b(0, i) = (r.bernoulli(p) ? up : down) / sqrt_n;
  }
  return {std::move(a), std::move(b)};
}

// Orthogonal projection onto the zero-row-sum hyperplane: entries
// delta_ij - 1/n.  Kills the all-ones direction and fixes its complement.
inline Matrix row_sum_projector(std::size_t n) {
  if (n == 0) throw invalid_argument_error("row_sum_projector: dimension must be positive");
  Matrix p(n, n);
  const double c = 1.0 / static_cast<double>(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) p(i, j) = (i == j ? 1.0 - c : -c);
  return p;
}

// An iid draw plus a bounded-rank perturbation, kept in factored form.  The
// operator the model represents is X/sqrt(n) + A*B; X is stored unnormalized.
struct PerturbedModel {
  std::size_t n = 0;
  Matrix X;  // n x n, unnormalized iid entries
  Matrix A;  // n x k
  Matrix B;  // k x n
  std::string label;

  std::size_t rank_bound() const { return A.cols(); }

  // Dense X/sqrt(n) + A*B, for eigensolver cross-checks.
  Matrix assembled() const {
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) m(i, j) = X(i, j) * inv_sqrt_n;
    const std::size_t k = A.cols();
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t l = 0; l < k; ++l) {
        Complex ail = A(i, l);
        if (ail == Complex(0.0, 0.0)) continue;
        for (std::size_t j = 0; j < n; ++j) m(i, j) += ail * B(l, j);
      }
    return m;
  }
};

inline Matrix assemble_dense(const PerturbedModel& model) { return model.assembled(); }

}
