#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <memory>
#include <utility>
#include <vector>

#include "outlab/eigen_qr.hpp"
#include "outlab/ensembles.hpp"
#include "outlab/linalg.hpp"
#include "outlab/lu.hpp"
#include "outlab/matching.hpp"
#include "outlab/matrix.hpp"
#include "outlab/winding.hpp"

namespace outlab {

// Perturbation determinant f(z) = det(I_k + B (X/sqrt(n) - z)^{-1} A).  Its
// zeros outside the spectrum of X/sqrt(n) are exactly the eigenvalues of
// X/sqrt(n) + A B there, because f equals the characteristic polynomial ratio
// det(X/sqrt(n) + AB - z) / det(X/sqrt(n) - z).
inline Complex weinstein_det(const PerturbedModel& model, Complex z) {
  const std::size_t n = model.n, k = model.A.cols();
  if (k == 0) return {1.0, 0.0};
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix m = model.X;
  m *= Complex(inv_sqrt_n, 0.0);
  for (std::size_t i = 0; i < n; ++i) m(i, i) -= z;
  LuFactorization f = lu_factor(std::move(m));
  if (f.singular) throw singular_error("weinstein_det: z is an eigenvalue of X/sqrt(n)", z);
  Matrix y = lu_solve(f, model.A);  // k resolvent solves, one per column
  Matrix g = model.B * y;           // k x k
  for (std::size_t i = 0; i < k; ++i) g(i, i) += 1.0;
  return determinant(lu_factor(std::move(g)));
}

// Same value, evaluated through a one-time Hessenberg similarity: with
// H = Q^* (X/sqrt(n)) Q, Ahat = Q^* A and Bhat = B Q,
//   f(z) = det(I_k + Bhat (H - z)^{-1} Ahat),
// so after the O(n^3) setup every shift costs k O(n^2) banded solves.  One
// instance serves one thread at a time.
class WeinsteinEvaluator {
public:
  explicit WeinsteinEvaluator(const PerturbedModel& model)
      : n_(model.n), k_(model.A.cols()), ahat_(model.A), bhat_(model.B) {
    const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n_));
    Matrix xs = model.X;
    xs *= Complex(inv_sqrt_n, 0.0);
    HessenbergForm form = hessenberg_reduce(std::move(xs));
    form.apply_q_star_left(ahat_);
    form.apply_q_right(bhat_);
    solver_ = std::make_unique<ShiftedHessenbergSolver>(form.hessenberg_matrix());
  }

  std::size_t rank_bound() const { return k_; }

  Complex operator()(Complex z) const {
    if (k_ == 0) return {1.0, 0.0};
    solver_->factor(z);
    Matrix g(k_, k_);
    Vector col(n_);
    for (std::size_t j = 0; j < k_; ++j) {
      for (std::size_t i = 0; i < n_; ++i) col[i] = ahat_(i, j);
      solver_->solve_in_place(col);
      for (std::size_t i = 0; i < k_; ++i) {
        Complex acc(0.0, 0.0);
        const Complex* bi = bhat_.row(i);
        for (std::size_t l = 0; l < n_; ++l) acc += bi[l] * col[l];
        g(i, j) = acc;
      }
    }
    for (std::size_t i = 0; i < k_; ++i) g(i, i) += 1.0;
    return determinant(lu_factor(std::move(g)));
  }

  // log det(H - z) from the most recent factorization; H is similar to
  // X/sqrt(n), so this is the denominator of the characteristic ratio.
  Complex log_det_resolvent_base(Complex z) const {
    solver_->factor(z);
    return solver_->log_det();
  }

private:
  std::size_t n_, k_;
  Matrix ahat_;
  Matrix bhat_;
  mutable std::unique_ptr<ShiftedHessenbergSolver> solver_;
};

// g(z) = prod_i (1 - lambda_i / z), the large-n limit profile of the
// perturbation determinant outside the unit disk.
inline Complex comparator_rational(const std::vector<Complex>& eigs_of_c, Complex z) {
  if (z == Complex(0.0, 0.0))
    throw invalid_argument_error("comparator_rational: z = 0 sits on the pole");
  Complex g(1.0, 0.0);
  for (Complex lam : eigs_of_c) g *= Complex(1.0, 0.0) - lam / z;
  return g;
}

// Direct characteristic-ratio evaluation by two dense LU determinants, in log
// space so n in the hundreds cannot overflow the product.  Deliberately a
// different code path from weinstein_det; slow, and guarded to n <= 512.
inline Complex char_poly_ratio_oracle(const PerturbedModel& model, Complex z) {
  const std::size_t n = model.n;
  if (n > 512)
    throw invalid_argument_error("char_poly_ratio_oracle: dense determinants guarded to n <= 512");
  const double inv_sqrt_n = 1.0 / std::sqrt(static_cast<double>(n));
  Matrix base = model.X;
  base *= Complex(inv_sqrt_n, 0.0);
  for (std::size_t i = 0; i < n; ++i) base(i, i) -= z;
  Matrix shifted = model.assembled();
  for (std::size_t i = 0; i < n; ++i) shifted(i, i) -= z;

  LuFactorization fb = lu_factor(std::move(base));
  if (fb.singular)
    throw singular_error("char_poly_ratio_oracle: z is an eigenvalue of X/sqrt(n)", z);
  Complex diff = log_determinant(lu_factor(std::move(shifted))) - log_determinant(fb);
  return std::exp(diff.real()) * Complex(std::cos(diff.imag()), std::sin(diff.imag()));
}

// Search region: the closed annulus r_min <= |z| <= r_max about the origin.
struct AnnulusRegion {
  double r_min = 0.0;
  double r_max = 0.0;

  AnnulusRegion() = default;
  AnnulusRegion(double rmin, double rmax) : r_min(rmin), r_max(rmax) {
    if (!(1.0 < r_min && r_min < r_max))
      throw region_error("AnnulusRegion: need 1 < r_min < r_max");
  }
};

struct OutlierReport {
  std::vector<LocatedZero> zeros;
  double spectral_radius_guard = 0.0;  // measured normalized power-norm root
  AnnulusRegion region;
  int total_winding = 0;  // zeros minus poles over the region boundary
  bool guard_failed = false;
};

namespace detail {

// Zeros of fn strictly beyond radius r: f tends to 1 at infinity and all n
// poles sit well inside r, so the count is minus the winding around |z| = r.
inline int zeros_beyond(const ComplexFn& fn, double r, const WindingOptions& opt) {
  return -winding_number(fn, circle_contour(Complex(0.0, 0.0), r, 32), opt);
}

}  // namespace detail

// Locate every eigenvalue of X/sqrt(n) + AB with modulus >= 1 + 2*eps.
//
// The spectral-radius guard first certifies that the unperturbed bulk stays
// inside radius 1 + eps: with m0 = ceil(log n), the norm ||(X/sqrt(n))^m0||
// concentrates near m0 + 1, so its normalized m0-th root
//     rho_hat = (||(X/sqrt(n))^m0|| / (m0 + 1))^(1/m0)
// is near 1 and exceeds 1 + eps only on the exceptional event that the report
// flags instead of mislabeling bulk eigenvalues as outliers.  After the guard,
// the perturbation determinant is analytic and pole-free on |z| >= 1 + eps,
// and its zeros there are located by sector subdivision.
inline OutlierReport detect_outliers(const PerturbedModel& model, double eps, double tol = 1e-9) {
  if (!(eps > 0.0)) throw invalid_argument_error("detect_outliers: eps must be positive");
  const std::size_t n = model.n;
  const std::size_t k = model.A.cols();

  OutlierReport report;
  int m0 = static_cast<int>(std::ceil(std::log(static_cast<double>(std::max<std::size_t>(n, 2)))));
  {
    Matrix xs = model.X;
    xs *= Complex(1.0 / std::sqrt(static_cast<double>(n)), 0.0);
    double pw = power_norm(xs, m0, 1e-3);
    report.spectral_radius_guard = std::pow(pw / (m0 + 1), 1.0 / m0);
  }
  double r_min = 1.0 + 2.0 * eps;
  if (report.spectral_radius_guard >= 1.0 + eps) {
    report.guard_failed = true;
    report.region = AnnulusRegion(r_min, r_min + 1.0);
    return report;
  }
  if (k == 0) {
    report.region = AnnulusRegion(r_min, r_min + 1.0);
    return report;  // f is identically 1
  }

  WeinsteinEvaluator eval(model);
  ComplexFn fn = [&eval](Complex z) { return eval(z); };

  // r_max from the perturbation scale: the candidate zeros track eigenvalues
  // of AB, i.e. of the k x k product BA.  Extend outward until the circle
  // certifiably has no zeros beyond it.
  double top = 0.0;
  for (Complex lam : eigenvalues(model.B * model.A)) top = std::max(top, std::abs(lam));
  double r_max = std::max(2.0 + 2.0 * top, r_min + 1.0);

  ZeroSearchOptions zopt;
  zopt.tol = tol;
  zopt.winding.min_modulus = 1e-9;

  int beyond = detail::zeros_beyond(fn, r_max, zopt.winding);
  for (int grow = 0; beyond != 0 && grow < 10; ++grow) {
    r_max *= 2.0;
    beyond = detail::zeros_beyond(fn, r_max, zopt.winding);
  }
  if (beyond != 0)
    throw contour_error("detect_outliers: zeros persist beyond every tried outer radius");

  // Count over the region boundary, nudging either circle off any zero it
  // grazes.  The inner circle may retreat toward 1 + 1.6*eps: still beyond
  // the guarded bulk, so no poles enter the count.
  int inner = 0;
  bool counted = false;
  for (int attempt = 0; attempt < 8 && !counted; ++attempt) {
    try {
      inner = detail::zeros_beyond(fn, r_min, zopt.winding);
      counted = true;
    } catch (const contour_error&) {
      r_min -= 0.05 * eps;
    }
  }
  if (!counted)
    throw contour_error("detect_outliers: inner boundary would not clear the zero set");
  report.region = AnnulusRegion(r_min, r_max);
  report.total_winding = inner;  // all beyond-r_max zeros are ruled out above

  if (inner == 0) return report;

  report.zeros = locate_zeros_annulus(fn, r_min, r_max, zopt, 1.0 + 1.5 * eps);
  // Dilated sectors can reach below r_min; keep only the declared region.
  std::erase_if(report.zeros,
                [&](const LocatedZero& z) { return std::abs(z.position) < report.region.r_min; });

  int located = 0;
  for (const LocatedZero& z : report.zeros) located += z.multiplicity;
  if (located != report.total_winding)
    throw contour_error("detect_outliers: located multiplicities disagree with the boundary count");
  return report;
}

// Pairing of found outliers against predictions, minimizing the largest pair
// distance.  Count mismatch is an outcome, not an error: the caller decides
// whether a missing or extra outlier fails its criterion.
struct OutlierMatch {
  bool count_mismatch = false;
  std::vector<std::pair<Complex, Complex>> pairs;  // (found, predicted)
  double max_distance = 0.0;
};

inline OutlierMatch match_outliers(const std::vector<Complex>& found,
                                   const std::vector<Complex>& predicted) {
  OutlierMatch out;
  out.count_mismatch = found.size() != predicted.size();
  BottleneckMatch m = bottleneck_match(found, predicted);
  for (std::size_t i = 0; i < found.size(); ++i)
    if (m.assignment[i] != unmatched) out.pairs.emplace_back(found[i], predicted[m.assignment[i]]);
  out.max_distance = m.bottleneck;
  return out;
}

// Unit eigenvector candidate (I - X/(z_hat sqrt(n)))^{-1} phi for a rank-one
// mean shift located at z_hat; computed through the resolvent identity
//   (I - X/(z sqrt(n)))^{-1} phi = -z (X/sqrt(n) - z)^{-1} phi.
inline Vector outlier_eigenvector(const Matrix& x, Complex z_hat) {
  if (z_hat == Complex(0.0, 0.0))
    throw invalid_argument_error("outlier_eigenvector: z must be nonzero");
  Vector phi = unit_ones_vector(x.rows());
  Vector w = resolvent_solve(x, z_hat, phi);
  scale(w, -z_hat);
  return normalized(std::move(w));
}

// Midpoint-rule estimate of the area integral of log+ (1/|fn|) over the
// annulus 1+2*eps <= |z| <= 1+3*eps.  Large values flag near-zeros of fn in
// the band; purely diagnostic, reported but never used as a certified count.
inline double jensen_log_integral(const ComplexFn& fn, double eps, int grid_resolution) {
  if (!(eps > 0.0)) throw invalid_argument_error("jensen_log_integral: eps must be positive");
  if (grid_resolution < 1)
    throw invalid_argument_error("jensen_log_integral: grid resolution must be positive");
  const double cap = std::log(1e15);
  const double r0 = 1.0 + 2.0 * eps, r1 = 1.0 + 3.0 * eps;
  const int nr = grid_resolution, nth = 4 * grid_resolution;
  const double pi = 3.14159265358979323846;
  const double dr = (r1 - r0) / nr, dth = 2.0 * pi / nth;
  double total = 0.0;
  for (int i = 0; i < nr; ++i) {
    double r = r0 + (i + 0.5) * dr;
    for (int j = 0; j < nth; ++j) {
      double th = (j + 0.5) * dth;
      double integrand;
      try {
        double a = std::abs(fn(r * Complex(std::cos(th), std::sin(th))));
        integrand = (a >= 1.0) ? 0.0 : std::min(cap, std::log(1.0 / a));
      } catch (const error&) {
        integrand = cap;  // evaluation failure counts as a saturated near-zero
      }
      total += integrand * r * dr * dth;
    }
  }
  return total;
}

}
