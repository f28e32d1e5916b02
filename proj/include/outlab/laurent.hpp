#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "outlab/errors.hpp"
#include "outlab/lu.hpp"
#include "outlab/normal.hpp"
#include "outlab/rng.hpp"
#include "outlab/winding.hpp"

namespace outlab {

// Certified truncation order for the random series: with iid standard normal
// coefficients, the discarded tail past order J is Gaussian with standard
// deviation sigma_tail = mu * r^{-J} / sqrt(r^2 - 1) anywhere in |z| >= r,
// so J is the smallest order whose two-sided (1 - fail_prob) envelope fits
// under tail_tol.
struct TruncationPolicy {
  double r_min = 0.0;
  double tail_tol = 0.0;
  double fail_prob = 0.0;
  int certified_order = 0;
};

inline double series_tail_sigma(double mu, double r_min, int order) {
  return mu * std::pow(r_min, -order) / std::sqrt(r_min * r_min - 1.0);
}

inline TruncationPolicy choose_truncation(double r_min, double tail_tol, double fail_prob,
                                          double mu) {
  if (!(r_min > 1.0))
    throw region_error("choose_truncation: series only converges beyond radius 1");
  if (!(tail_tol > 0.0)) throw invalid_argument_error("choose_truncation: tail_tol not positive");
  if (!(fail_prob > 0.0 && fail_prob < 1.0))
    throw invalid_argument_error("choose_truncation: fail_prob must lie inside (0,1)");
  if (!(mu > 0.0)) throw invalid_argument_error("choose_truncation: mu must be positive");

  double quantile = normal_quantile(1.0 - 0.5 * fail_prob);
  // smallest J with sigma_tail(J) * quantile <= tail_tol
  double lhs = mu * quantile / (tail_tol * std::sqrt(r_min * r_min - 1.0));
  int j = 1;
  if (lhs > 1.0) j = static_cast<int>(std::ceil(std::log(lhs) / std::log(r_min)));
  if (j < 1) j = 1;
  while (series_tail_sigma(mu, r_min, j) * quantile > tail_tol) ++j;  // ceiling roundoff guard
  return {r_min, tail_tol, fail_prob, j};
}

enum class CoefficientField { real, complex };

// Truncation of g(z) = 1 - mu * sum_{j>=1} g_j z^{-j} with iid standard
// normal coefficients, certified by its policy on |z| >= policy.r_min.
struct RandomLaurentSeries {
  double mu = 1.0;
  CoefficientField field = CoefficientField::real;
  std::vector<Complex> coefficients;  // g_1 .. g_J
  TruncationPolicy policy;
};

// Coefficients come from the (trial, tag 2) stream: independent of both the
// matrix entries (tag 0) and any random perturbation factor (tag 1).
inline RandomLaurentSeries sample_series(double mu, const TruncationPolicy& policy,
                                         CoefficientField field, const SeedPolicy& seed,
                                         std::uint64_t trial) {
  if (policy.certified_order < 1)
    throw invalid_argument_error("sample_series: policy has no certified order");
  RandomLaurentSeries s;
  s.mu = mu;
  s.field = field;
  s.policy = policy;
  Rng r = seed.stream(trial, 2);
  s.coefficients.resize(static_cast<std::size_t>(policy.certified_order));
  for (Complex& g : s.coefficients)
    g = (field == CoefficientField::real) ? Complex(r.gaussian(), 0.0) : r.gaussian_complex();
  return s;
}

// Horner evaluation in w = 1/z; refuses points inside the certified radius.
// Contour samples meant to sit exactly on the boundary circle can land a few
// ulps inside it after the polar arithmetic, so the guard allows that sliver;
// the tail envelope is continuous in the radius and does not notice it.
inline Complex evaluate(const RandomLaurentSeries& s, Complex z) {
  if (std::abs(z) < s.policy.r_min * (1.0 - 1e-12))
    throw region_error("evaluate: point is inside the certified radius of the series");
  Complex w = 1.0 / z;
  Complex acc(0.0, 0.0);
  for (std::size_t j = s.coefficients.size(); j-- > 0;) acc = (acc + s.coefficients[j]) * w;
  return Complex(1.0, 0.0) - s.mu * acc;
}

// Zeros of the truncated series in the given annulus.  The series is analytic
// away from the origin, so the subdivision search applies directly; dilation
// never reaches below the certified radius.
inline std::vector<LocatedZero> series_zeros(const RandomLaurentSeries& s, double r_min,
                                             double r_max, const ZeroSearchOptions& opt = {}) {
  if (!(r_min >= s.policy.r_min))
    throw region_error("series_zeros: region must stay inside the certified annulus");
  ComplexFn fn = [&s](Complex z) { return evaluate(s, z); };
  return locate_zeros_annulus(fn, r_min, r_max, opt, s.policy.r_min);
}

enum class GpsKernel { stated, squared };

// Determinantal intensity for k points in the open unit disk:
//   (1/pi^k) det [ K(w_i, w_j) ]
// with K(u, v) = 1/(1 - u conj(v)) under the stated kernel and its square
// under the squared variant.  Both are kept so a Monte Carlo zero count can
// adjudicate which one matches the zero process; the Gram structure makes the
// value real and nonnegative up to roundoff.
inline double gps_correlation(const std::vector<Complex>& points,
                              GpsKernel kernel = GpsKernel::stated) {
  const std::size_t k = points.size();
  if (k == 0) return 1.0;
  for (Complex w : points)
    if (!(std::abs(w) < 1.0))
      throw region_error("gps_correlation: every point must lie inside the open unit disk");
  Matrix g(k, k);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = 0; j < k; ++j) {
      Complex base = Complex(1.0, 0.0) / (Complex(1.0, 0.0) - points[i] * std::conj(points[j]));
      g(i, j) = (kernel == GpsKernel::squared) ? base * base : base;
    }
  Complex det = determinant(lu_factor(std::move(g)));
  const double pi = 3.14159265358979323846;
  return det.real() / std::pow(pi, static_cast<double>(k));
}

}
