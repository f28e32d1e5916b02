#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "outlab/ensembles.hpp"
#include "outlab/errors.hpp"
#include "outlab/linalg.hpp"
#include "outlab/matrix.hpp"
#include "outlab/rng.hpp"
#include "outlab/svd_jacobi.hpp"

namespace outlab {

// First and second moment accumulator whose partial sums merge associatively,
// so trial workers can reduce in any order and agree with a sequential pass
// up to floating reassociation.
struct RunningMoments {
  long long count = 0;
  double sum = 0.0;
  double sum_sq = 0.0;

  void push(double x) {
    ++count;
    sum += x;
    sum_sq += x * x;
  }
  void merge(const RunningMoments& o) {
    count += o.count;
    sum += o.sum;
    sum_sq += o.sum_sq;
  }
  double mean() const { return count == 0 ? 0.0 : sum / static_cast<double>(count); }
  double variance() const {  // unbiased sample variance
    if (count < 2) return 0.0;
    double m = mean();
    double v = (sum_sq - static_cast<double>(count) * m * m) / static_cast<double>(count - 1);
    return v > 0.0 ? v : 0.0;
  }
  double std_error() const {
    return count == 0 ? 0.0 : std::sqrt(variance() / static_cast<double>(count));
  }
};

inline double spectral_radius(const std::vector<Complex>& eigs) {
  if (eigs.empty()) throw invalid_argument_error("spectral_radius: empty spectrum");
  double r = 0.0;
  for (Complex e : eigs) r = std::max(r, std::abs(e));
  return r;
}

struct ComplexWindow {
  double re_lo = 0.0, re_hi = 0.0, im_lo = 0.0, im_hi = 0.0;
};

struct ESDHistogram {
  ComplexWindow window;
  std::size_t bins_re = 0, bins_im = 0;
  std::vector<long long> counts;  // indexed [ir * bins_im + ii]
  long long out_of_window = 0;
  long long n_eigenvalues = 0;

  long long at(std::size_t ir, std::size_t ii) const { return counts[ir * bins_im + ii]; }
};

// Bin boundaries are half open [lo, hi) on both axes, so a point on a shared
// edge belongs to the bin above it and the top edges fall out of window.
inline ESDHistogram esd_histogram(const std::vector<Complex>& eigs, const ComplexWindow& w,
                                  std::size_t bins_re, std::size_t bins_im) {
  if (bins_re < 1 || bins_im < 1) throw invalid_argument_error("esd_histogram: need bins >= 1");
  if (!(w.re_lo < w.re_hi && w.im_lo < w.im_hi))
    throw invalid_argument_error("esd_histogram: degenerate window");
  ESDHistogram h;
  h.window = w;
  h.bins_re = bins_re;
  h.bins_im = bins_im;
  h.counts.assign(bins_re * bins_im, 0);
  h.n_eigenvalues = static_cast<long long>(eigs.size());
  for (Complex e : eigs) {
    double fr = (e.real() - w.re_lo) / (w.re_hi - w.re_lo) * static_cast<double>(bins_re);
    double fi = (e.imag() - w.im_lo) / (w.im_hi - w.im_lo) * static_cast<double>(bins_im);
    if (fr < 0.0 || fi < 0.0 || fr >= static_cast<double>(bins_re) ||
        fi >= static_cast<double>(bins_im)) {
      ++h.out_of_window;
      continue;
    }
    ++h.counts[static_cast<std::size_t>(fr) * bins_im + static_cast<std::size_t>(fi)];
  }
  return h;
}

struct CircularLawDistance {
  double radial_ks = 0.0;
  double angular_ks = 0.0;
};

// Kolmogorov distances of the spectrum against the uniform unit-disk measure:
// radii against the disk's area fraction min(r^2, 1), arguments against the
// uniform angle.
inline CircularLawDistance circular_law_distance(const std::vector<Complex>& eigs) {
  if (eigs.empty()) throw invalid_argument_error("circular_law_distance: empty spectrum");
  const double pi = 3.14159265358979323846;
  const std::size_t n = eigs.size();

  auto ks = [n](std::vector<double> xs, auto cdf) {
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      double f = cdf(xs[i]);
      d = std::max(d, std::max(f - static_cast<double>(i) / n,
                               static_cast<double>(i + 1) / n - f));
    }
    return d;
  };

  std::vector<double> radii(n), angles(n);
  for (std::size_t i = 0; i < n; ++i) {
    radii[i] = std::abs(eigs[i]);
    angles[i] = std::arg(eigs[i]);
  }
  CircularLawDistance d;
  d.radial_ks = ks(std::move(radii), [](double r) { return std::min(r * r, 1.0); });
  d.angular_ks =
      ks(std::move(angles), [pi](double t) { return (t + pi) / (2.0 * pi); });
  return d;
}

// || (X / sqrt(n))^m || / (m + 1), the m-th power norm against its limit,
// applied factor by factor so the power never gets materialized.
inline double power_norm_ratio(const Matrix& x, int m, double tol = 1e-6) {
  if (m < 1) throw invalid_argument_error("power_norm_ratio: power must be at least 1");
  if (x.rows() != x.cols()) throw invalid_argument_error("power_norm_ratio: matrix not square");
  Matrix scaled = x;
  double inv = 1.0 / std::sqrt(static_cast<double>(x.rows()));
  for (std::size_t i = 0; i < scaled.rows(); ++i)
    for (std::size_t j = 0; j < scaled.cols(); ++j) scaled(i, j) *= inv;
  return power_norm(scaled, m, tol) / static_cast<double>(m + 1);
}

struct CLTSampleSet {
  std::size_t n = 0;
  std::string atom;
  Vector u, v;
  std::vector<std::vector<Complex>> samples;  // one row per trial: Z_1 .. Z_jmax

  std::vector<double> real_column(std::size_t j) const {  // zero-based column
    std::vector<double> col;
    col.reserve(samples.size());
    for (const auto& row : samples) col.push_back(row.at(j).real());
    return col;
  }
};

// Z_j = sqrt(n) <(X / sqrt(n))^j u, v> across fresh matrix draws.  The unit
// vectors must be delocalized, every entry at most 10 / sqrt(n), or the
// normalization stops being the right scale.
inline CLTSampleSet clt_samples(std::size_t n, const AtomDistribution& atom, int j_max,
                                const Vector& u, const Vector& v, int n_trials,
                                const SeedPolicy& seed) {
  if (n < 1 || j_max < 1 || n_trials < 1)
    throw invalid_argument_error("clt_samples: need n, j_max, n_trials >= 1");
  if (u.size() != n || v.size() != n)
    throw invalid_argument_error("clt_samples: vector length must equal n");
  double sqrt_n = std::sqrt(static_cast<double>(n));
  double cap = 10.0 / sqrt_n;
  double nu = 0.0, nv = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(u[i]) > cap || std::abs(v[i]) > cap)
      throw invalid_argument_error("clt_samples: vectors are not delocalized");
    nu += std::norm(u[i]);
    nv += std::norm(v[i]);
  }
  if (std::abs(nu - 1.0) > 1e-8 || std::abs(nv - 1.0) > 1e-8)
    throw invalid_argument_error("clt_samples: vectors must be unit length");

  CLTSampleSet set;
  set.n = n;
  set.atom = atom.name();
  set.u = u;
  set.v = v;
  set.samples.reserve(static_cast<std::size_t>(n_trials));
  for (int t = 0; t < n_trials; ++t) {
    Matrix x = sample_iid_matrix(n, atom, seed, static_cast<std::uint64_t>(t));
    std::vector<Complex> row;
    row.reserve(static_cast<std::size_t>(j_max));
    for (int j = 1; j <= j_max; ++j) row.push_back(sqrt_n * bilinear_power(x, j, u, v));
    set.samples.push_back(std::move(row));
  }
  return set;
}

struct MomentTest {
  double empirical = 0.0;
  double target = 0.0;
  double z_score = 0.0;
};

// r-th moment of the samples against the standard normal moment
// r! / (2^{r/2} (r/2)!), z-scored by the moment estimator's standard error.
inline MomentTest gaussian_moment_test(const std::vector<double>& samples, int r) {
  if (r < 2 || r % 2 != 0)
    throw invalid_argument_error("gaussian_moment_test: order must be even and positive");
  if (samples.size() < 30)
    throw invalid_argument_error("gaussian_moment_test: need at least 30 samples");
  MomentTest t;
  t.target = 1.0;
  for (int i = 1; i < r; i += 2) t.target *= static_cast<double>(i);
  RunningMoments acc;
  for (double x : samples) acc.push(std::pow(x, r));
  t.empirical = acc.mean();
  double se = acc.std_error();
  if (se == 0.0)
    t.z_score = (t.empirical == t.target)
                    ? 0.0
                    : std::copysign(std::numeric_limits<double>::infinity(),
                                    t.empirical - t.target);
  else
    t.z_score = (t.empirical - t.target) / se;
  return t;
}

struct AnnulusWindow {
  double r_lo = 0.0, r_hi = 0.0;
};

struct CorrelationEstimate {
  int k = 1;
  std::size_t radial_bins = 0, angular_bins = 0;
  AnnulusWindow region;
  // k=1: one entry per (radial, angular) bin; k=2: one entry per ordered bin
  // pair [b1 * bin_count() + b2]
  std::vector<double> density;
  std::vector<double> std_error;
  long long n_trials = 0;

  std::size_t bin_count() const { return radial_bins * angular_bins; }
};

namespace detail {

// polar bin index inside the annulus window, or npos when outside
inline std::size_t polar_bin(Complex z, const AnnulusWindow& w, std::size_t radial_bins,
                             std::size_t angular_bins) {
  const double pi = 3.14159265358979323846;
  double r = std::abs(z);
  if (r < w.r_lo || r >= w.r_hi) return static_cast<std::size_t>(-1);
  auto ri = static_cast<std::size_t>((r - w.r_lo) / (w.r_hi - w.r_lo) *
                                     static_cast<double>(radial_bins));
  double frac = (std::arg(z) + pi) / (2.0 * pi);  // in (0, 1]
  auto ai = static_cast<std::size_t>(frac * static_cast<double>(angular_bins));
  if (ai >= angular_bins) ai = angular_bins - 1;
  return ri * angular_bins + ai;
}

inline double polar_bin_area(std::size_t bin, const AnnulusWindow& w, std::size_t radial_bins,
                             std::size_t angular_bins) {
  const double pi = 3.14159265358979323846;
  std::size_t ri = bin / angular_bins;
  double dr = (w.r_hi - w.r_lo) / static_cast<double>(radial_bins);
  double r0 = w.r_lo + dr * static_cast<double>(ri);
  double r1 = r0 + dr;
  return 0.5 * (r1 * r1 - r0 * r0) * (2.0 * pi / static_cast<double>(angular_bins));
}

}  // namespace detail

// Empirical k-point correlation over polar bins of the annulus, averaged
// across trials.  k=1 is count per bin over bin area; k=2 is ordered distinct
// pairs over the product of bin areas, halved, matching a symmetric-function
// normalization with a 1/k! factor.
inline CorrelationEstimate kpoint_estimate(const std::vector<std::vector<Complex>>& trials,
                                           int k, std::size_t radial_bins,
                                           std::size_t angular_bins, const AnnulusWindow& region) {
  if (k != 1 && k != 2) throw invalid_argument_error("kpoint_estimate: only orders 1 and 2");
  if (radial_bins < 1 || angular_bins < 1)
    throw invalid_argument_error("kpoint_estimate: need bins >= 1");
  if (!(0.0 <= region.r_lo && region.r_lo < region.r_hi))
    throw invalid_argument_error("kpoint_estimate: bad annulus");

  CorrelationEstimate est;
  est.k = k;
  est.radial_bins = radial_bins;
  est.angular_bins = angular_bins;
  est.region = region;
  est.n_trials = static_cast<long long>(trials.size());
  const std::size_t nb = est.bin_count();
  const std::size_t cells = (k == 1) ? nb : nb * nb;
  std::vector<RunningMoments> acc(cells);

  std::vector<double> area(nb);
  for (std::size_t b = 0; b < nb; ++b)
    area[b] = detail::polar_bin_area(b, region, radial_bins, angular_bins);

  std::vector<double> counts(nb);
  for (const auto& points : trials) {
    std::fill(counts.begin(), counts.end(), 0.0);
    for (Complex p : points) {
      std::size_t b = detail::polar_bin(p, region, radial_bins, angular_bins);
      if (b != static_cast<std::size_t>(-1)) counts[b] += 1.0;
    }
    if (k == 1) {
      for (std::size_t b = 0; b < nb; ++b) acc[b].push(counts[b] / area[b]);
    } else {
      for (std::size_t b1 = 0; b1 < nb; ++b1)
        for (std::size_t b2 = 0; b2 < nb; ++b2) {
          double pairs = counts[b1] * counts[b2] - (b1 == b2 ? counts[b1] : 0.0);
          acc[b1 * nb + b2].push(pairs / (area[b1] * area[b2] * 2.0));
        }
    }
  }

  est.density.resize(cells);
  est.std_error.resize(cells);
  for (std::size_t c = 0; c < cells; ++c) {
    est.density[c] = acc[c].mean();
    est.std_error[c] = acc[c].std_error();
  }
  return est;
}

struct MomentEstimate {
  int order = 1;
  double estimate = 0.0;
  double std_error = 0.0;
};

// empirical moments E[N^m] of a per-trial count, m = 1 .. m_max
inline std::vector<MomentEstimate> outlier_count_moments(const std::vector<double>& counts,
                                                         int m_max) {
  if (m_max < 1) throw invalid_argument_error("outlier_count_moments: need m_max >= 1");
  std::vector<MomentEstimate> out;
  for (int m = 1; m <= m_max; ++m) {
    RunningMoments acc;
    for (double c : counts) acc.push(std::pow(c, m));
    out.push_back({m, acc.mean(), acc.std_error()});
  }
  return out;
}

struct InterlacingReport {
  bool holds = true;
  double max_violation = 0.0;  // worst overrun of the chain, before slack
  double slack = 0.0;
};

// Weyl chain for a rank-one update: with singular values in decreasing order,
// sigma_{i-1}(M) >= sigma_i(M + u v*) >= sigma_{i+1}(M) for every valid i,
// allowing 1e-9 * ||M||_F of floating slack.
inline InterlacingReport interlacing_check(const Matrix& m, const Vector& u, const Vector& v) {
  if (m.rows() != m.cols()) throw invalid_argument_error("interlacing_check: matrix not square");
  if (u.size() != m.rows() || v.size() != m.rows())
    throw invalid_argument_error("interlacing_check: vector length must match");
  Matrix p = m;
  for (std::size_t i = 0; i < p.rows(); ++i)
    for (std::size_t j = 0; j < p.cols(); ++j) p(i, j) += u[i] * std::conj(v[j]);

  std::vector<double> s = singular_values(m);
  std::vector<double> sp = singular_values(p);
  InterlacingReport rep;
  rep.slack = 1e-9 * m.frobenius_norm();
  for (std::size_t i = 0; i < sp.size(); ++i) {
    if (i >= 1) rep.max_violation = std::max(rep.max_violation, sp[i] - s[i - 1]);
    if (i + 1 < s.size()) rep.max_violation = std::max(rep.max_violation, s[i + 1] - sp[i]);
  }
  rep.holds = rep.max_violation <= rep.slack;
  return rep;
}

// smallest singular value of M - zI
inline double least_singular_diagnostic(const Matrix& m, Complex z) {
  if (m.rows() != m.cols())
    throw invalid_argument_error("least_singular_diagnostic: matrix not square");
  Matrix s = m;
  for (std::size_t i = 0; i < s.rows(); ++i) s(i, i) -= z;
  std::vector<double> sv = singular_values(s);
  return sv.empty() ? 0.0 : sv.back();
}

}  // namespace outlab
