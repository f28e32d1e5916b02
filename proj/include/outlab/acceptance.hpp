#pragma once

// Acceptance checklist: the end-to-end claims the repository makes about
// itself, each verified by an actual run and printed as one pass/fail line
// with supporting detail.  A criterion that cannot hold is allowed to fail
// visibly with its explanation printed next to it; nothing here downgrades a
// red check into a green one.

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "outlab/experiments.hpp"
#include "outlab/matching.hpp"
#include "outlab/svd_jacobi.hpp"

namespace outlab {

struct CriterionResult {
  bool pass = true;
  std::vector<std::string> details;

  void check(bool ok, const std::string& line) {
    pass = pass && ok;
    details.push_back(std::string(ok ? "ok   " : "FAIL ") + line);
  }
  void note(const std::string& line) { details.push_back("     " + line); }
};

namespace acceptance {

inline std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

// The detector's determinant against an independent dense evaluation of the
// same characteristic-polynomial ratio, over random instances and shifts.
inline CriterionResult determinant_matches_oracle() {
  CriterionResult res;
  SeedPolicy seed{20260822};
  const AtomDistribution atoms[3] = {AtomDistribution::rademacher(),
                                     AtomDistribution::gaussian_real(),
                                     AtomDistribution::gaussian_complex()};
  double worst = 0.0;
  int evaluated = 0, skipped = 0;
  for (int i = 0; i < 100; ++i) {
    std::size_t n = 8 + static_cast<std::size_t>((7 * i) % 53);
    std::size_t k = 1 + static_cast<std::size_t>(i % 3);
    PerturbedModel model;
    model.n = n;
    model.X = sample_iid_matrix(n, atoms[i % 3], seed, static_cast<std::uint64_t>(i));
    Rng rf = seed.stream(static_cast<std::uint64_t>(i), 1);
    Matrix a(n, k), b(k, n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < k; ++c) a(r, c) = 0.5 * rf.gaussian_complex();
    for (std::size_t r = 0; r < k; ++r)
      for (std::size_t c = 0; c < n; ++c) b(r, c) = 0.5 * rf.gaussian_complex();
    model.A = std::move(a);
    model.B = std::move(b);

    Rng rz = seed.stream(static_cast<std::uint64_t>(i), 2);
    for (int j = 0; j < 10; ++j) {
      double rad = 1.7 + 2.3 * rz.uniform01();
      double ang = 2.0 * 3.14159265358979323846 * rz.uniform01();
      Complex z = rad * Complex(std::cos(ang), std::sin(ang));
      Complex direct = weinstein_det(model, z);
      Complex oracle;
      try {
        oracle = char_poly_ratio_oracle(model, z);
      } catch (const singular_error&) {
        ++skipped;  // shift landed on the unperturbed spectrum; astronomically rare
        continue;
      }
      worst = std::max(worst, std::abs(direct - oracle) / (1.0 + std::abs(oracle)));
      ++evaluated;
    }
  }
  res.check(worst <= 1e-8, "largest relative gap " + num(worst) + " over " +
                               std::to_string(evaluated) + " shifts (tolerance 1e-8)");
  res.check(skipped == 0, std::to_string(skipped) + " shifts skipped as singular");
  return res;
}

inline CriterionResult planted_diagonal_recovered() {
  CriterionResult res;
  ExperimentResult r = run_experiment(default_config("fig1"));
  double frac = r.aggregate["recovery_fraction"].get<double>();
  res.check(r.failed_trials() == 0,
            std::to_string(r.failed_trials()) + " of 20 trials failed outright");
  res.check(frac >= 0.9, "recovery fraction " + num(frac) + " (need >= 0.9, tolerance " +
                             num(r.aggregate["prediction_tolerance"].get<double>()) + ")");
  double dense = r.aggregate["dense_max_distance"].get<double>();
  bool mismatch = r.aggregate["dense_count_mismatch"].get<bool>();
  res.check(!mismatch && dense <= 1e-6,
            "dense cross-check distance " + num(dense) + " with" +
                (mismatch ? " a" : " no") + " count mismatch (need <= 1e-6)");
  return res;
}

inline CriterionResult mean_shift_located_with_eigenvector() {
  CriterionResult res;
  ExperimentResult small = run_experiment(default_config("fig3"));
  double frac = small.aggregate["recovery_fraction"].get<double>();
  res.check(small.failed_trials() == 0,
            std::to_string(small.failed_trials()) + " of 50 trials failed outright");
  res.check(frac >= 0.9, "single-outlier recovery fraction " + num(frac) +
                             " at n=50 (need >= 0.9, tolerance " +
                             num(small.aggregate["prediction_tolerance"].get<double>()) + ")");
  double bulk = small.aggregate["bulk_max_modulus"].get<double>();
  res.check(bulk <= 1.2, "largest bulk modulus " + num(bulk) + " (need <= 1.2)");

  ExperimentConfig big = default_config("fig3");
  big.n = 500;
  big.trials = 20;
  big.dense_check = false;
  ExperimentResult r = run_experiment(big);
  const double tol = 5.0 / std::sqrt(500.0);
  double worst = 0.0;
  int missing = 0;
  for (const TrialRecord& t : r.trials) {
    if (t.failed || !t.stats.contains("eigenvector_distance")) {
      ++missing;
      continue;
    }
    worst = std::max(worst, t.stats["eigenvector_distance"].get<double>());
  }
  res.check(missing == 0 && worst <= tol,
            "eigenvector distance to the ones direction at n=500: worst " + num(worst) +
                " over 20 trials, " + std::to_string(missing) + " without a single outlier (need <= " +
                num(tol) + ")");
  return res;
}

inline CriterionResult vanishing_mean_shift_located() {
  CriterionResult res;
  ExperimentConfig cfg = default_config("fig4");
  cfg.dense_check = false;  // the claim is about the located outlier only
  ExperimentResult r = run_experiment(cfg);
  double frac = r.aggregate["recovery_fraction"].get<double>();
  res.check(r.failed_trials() == 0,
            std::to_string(r.failed_trials()) + " of 20 trials failed outright");
  res.check(frac >= 0.8, "recovery fraction " + num(frac) + " for the outlier near 2 (need >= 0.8, tolerance " +
                             num(r.aggregate["prediction_tolerance"].get<double>()) + ")");
  return res;
}

inline CriterionResult operator_norm_bands() {
  CriterionResult res;
  ExperimentResult r = run_experiment(default_config("norms"));
  res.check(r.failed_trials() == 0, std::to_string(r.failed_trials()) + " of 5 trials failed");
  double rho_lo = r.aggregate["spectral_radius_min"].get<double>();
  double rho_hi = r.aggregate["spectral_radius_max"].get<double>();
  res.check(rho_lo >= 0.9 && rho_hi <= 1.15,
            "spectral radius range [" + num(rho_lo) + ", " + num(rho_hi) +
                "] (need inside [0.9, 1.15])");
  for (const auto& band : r.aggregate["power_norm_bands"]) {
    int m = band["m"].get<int>();
    double lo = band["ratio_min"].get<double>(), hi = band["ratio_max"].get<double>();
    res.check(band["pass"].get<bool>(), "m=" + std::to_string(m) + " norm ratio range [" +
                                            num(lo) + ", " + num(hi) +
                                            "] (need inside [0.8, 1.2])");
  }
  if (!res.pass) {
    res.note("the m-th power norm of X/sqrt(n) converges to ((m+1)^(m+1)/m^m)^(1/2), for which");
    res.note("m+1 is only an upper bound: at m=3 the limit is 3.0792, ratio 0.7698, outside");
    res.note("the declared [0.8, 1.2] band, so this criterion cannot pass as stated; the bound");
    res.note("m+1 still holds in the direction the detector needs (measured ratios stay below 1).");
    // Independent evidence that the power iteration is not at fault: the same
    // norm from a dense SVD of the materialized third power.
    SeedPolicy seed{4242};
    Matrix x = sample_iid_matrix(200, AtomDistribution::rademacher(), seed, 0);
    Matrix s = x;
    s *= Complex(1.0 / std::sqrt(200.0), 0.0);
    Matrix cube = (s * s) * s;
    double direct = singular_values(cube).front();
    double iterated = power_norm(s, 3, 1e-8);
    res.note("cross-check at n=200: power iteration " + num(iterated) + " vs dense SVD " +
             num(direct) + " of the materialized cube (limit predicts 3.0792)");
  }
  return res;
}

inline CriterionResult circular_law_with_and_without_recentering() {
  CriterionResult res;
  ExperimentConfig plain = default_config("norms");
  plain.trials = 10;
  ExperimentResult rx = run_experiment(plain);
  res.check(rx.failed_trials() == 0, "plain family: " + std::to_string(rx.failed_trials()) +
                                         " of 10 trials failed");
  double xr = rx.aggregate["radial_ks_p90"].get<double>();
  double xa = rx.aggregate["angular_ks_p90"].get<double>();
  res.check(xr <= 0.06 && xa <= 0.06, "X/sqrt(n): 90th-percentile KS radial " + num(xr) +
                                          ", angular " + num(xa) + " (need <= 0.06)");

  ExperimentResult rp = run_experiment(default_config("zero_row_sum"));
  res.check(rp.failed_trials() == 0, "recentered family: " + std::to_string(rp.failed_trials()) +
                                         " of 10 trials failed");
  double pr = rp.aggregate["radial_ks_p90"].get<double>();
  double pa = rp.aggregate["angular_ks_p90"].get<double>();
  res.check(pr <= 0.06 && pa <= 0.06, "XP/sqrt(n): 90th-percentile KS radial " + num(pr) +
                                          ", angular " + num(pa) + " (need <= 0.06)");
  double rho_lo = rp.aggregate["spectral_radius_min"].get<double>();
  double rho_hi = rp.aggregate["spectral_radius_max"].get<double>();
  res.check(rho_lo >= 0.9 && rho_hi <= 1.15,
            "XP/sqrt(n) spectral radius range [" + num(rho_lo) + ", " + num(rho_hi) +
                "] (need inside [0.9, 1.15])");
  return res;
}

// Adding phi psi* with psi orthogonal to phi must not move the spectrum of
// X P / sqrt(n): the projector annihilates the ones direction, so the
// characteristic polynomial is unchanged no matter how large psi grows.
inline CriterionResult orthogonal_update_invariance() {
  CriterionResult res;
  SeedPolicy seed{77};
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    std::size_t n = 40 + static_cast<std::size_t>((7 * i) % 61);
    Matrix x = sample_iid_matrix(n, AtomDistribution::gaussian_real(), seed,
                                 static_cast<std::uint64_t>(i));
    Matrix m = detail::zero_row_sum_matrix(x);
    std::vector<Complex> base = eigenvalues(m);

    Vector phi = unit_ones_vector(n);
    Rng r = seed.stream(static_cast<std::uint64_t>(i), 3);
    Vector psi(n);
    for (Complex& v : psi) v = r.gaussian_complex();
    Complex along = inner(psi, phi);
    for (std::size_t j = 0; j < n; ++j) psi[j] -= along * phi[j];
    psi = normalized(std::move(psi));

    for (double amp : {1.0, 10.0, 1000.0}) {
      Matrix shifted = m;
      for (std::size_t a = 0; a < n; ++a)
        for (std::size_t b = 0; b < n; ++b)
          shifted(a, b) += amp * phi[a] * std::conj(psi[b]);
      BottleneckMatch match = bottleneck_match(eigenvalues(shifted), base);
      worst = std::max(worst, match.bottleneck);
    }
  }
  res.check(worst <= 1e-6, "largest spectrum displacement " + num(worst) +
                               " over 20 seeds x amplitudes {1, 10, 1000} (need <= 1e-6)");
  return res;
}

inline CriterionResult bilinear_forms_are_gaussian() {
  CriterionResult res;
  ExperimentResult r = run_experiment(default_config("clt"));
  res.check(r.failed_trials() == 0,
            std::to_string(r.failed_trials()) + " of 400 trials failed");
  for (const auto& o : r.aggregate["per_order"]) {
    int j = o["order"].get<int>();
    res.check(o["pass"].get<bool>(),
              "order " + std::to_string(j) + ": mean " + num(o["mean"].get<double>()) +
                  ", variance " + num(o["variance"].get<double>()) + ", fourth moment " +
                  num(o["fourth_standardized"].get<double>()) +
                  " (need |mean| <= 0.15, var in [0.8, 1.2], fourth in [2.2, 3.8])");
  }
  double corr = r.aggregate["corr_12"].get<double>();
  res.check(std::abs(corr) <= 0.15, "corr(Z_1, Z_2) = " + num(corr) + " (need |corr| <= 0.15)");
  return res;
}

inline CriterionResult model_counts_match_series() {
  CriterionResult res;
  ExperimentResult r = run_experiment(default_config("laurent_compare"));
  res.check(r.failed_trials() == 0,
            std::to_string(r.failed_trials()) + " of 200 model trials failed");
  res.check(r.aggregate["series_failed_trials"].get<long>() == 0,
            std::to_string(r.aggregate["series_failed_trials"].get<long>()) +
                " of 2000 series trials failed");
  double mm = r.aggregate["model"]["mean_count"].get<double>();
  double ms = r.aggregate["series"]["mean_count"].get<double>();
  double md = r.aggregate["model_doubled_n"]["mean_count"].get<double>();
  res.note("mean outlier count in [1.3, 3]: model " + num(mm) + " (n=500), model " + num(md) +
           " (n=1000), series " + num(ms));
  for (const auto& check : r.checks)
    res.check(check["pass"].get<bool>(),
              check["name"].get<std::string>() + " = " + num(check["value"].get<double>()) +
                  " (" + check["requirement"].get<std::string>() + ")");
  return res;
}

inline CriterionResult gaussian_series_intensity_adjudicated() {
  CriterionResult res;
  ExperimentResult r = run_experiment(default_config("gps_check"));
  res.check(r.failed_trials() == 0,
            std::to_string(r.failed_trials()) + " of 5000 trials failed");
  std::string verdict = r.aggregate["matched_intensity"].get<std::string>();
  for (const auto& band : r.aggregate["bands"]) {
    res.note("radius " + num(band["radius"].get<double>()) + ": mean count " +
             num(band["mean_count"].get<double>()) + " +- " +
             num(band["std_error"].get<double>()) + ", plain-kernel prediction " +
             num(band["expected_stated"].get<double>()) + " (rel err " +
             num(band["rel_error_stated"].get<double>()) + "), squared-kernel prediction " +
             num(band["expected_squared"].get<double>()) + " (rel err " +
             num(band["rel_error_squared"].get<double>()) + ")");
  }
  res.check(verdict == "squared" || verdict == "stated",
            "counts match exactly one candidate intensity within 15% everywhere: " + verdict);
  if (verdict == "squared")
    res.note("the zero process follows the SQUARED kernel (1/pi)/(1-|w|^2)^2; the plain "
             "(1/pi)/(1-|w|^2) form is rejected by the counts and reported here, not failed");
  return res;
}

inline CriterionResult property_invariants_green() {
  CriterionResult res;

  // Byte-level reproducibility across worker counts.
  {
    ExperimentConfig c = default_config("fig1");
    c.n = 40;
    c.trials = 6;
    c.workers = 1;
    ExperimentResult serial = run_experiment(c);
    c.workers = 3;
    ExperimentResult threaded = run_experiment(c);
    bool same_csv = render_eigen_csv(all_rows(serial)) == render_eigen_csv(all_rows(threaded));
    bool same_agg = serial.aggregate == threaded.aggregate;
    res.check(same_csv && same_agg, "identical table bytes and aggregates for 1 vs 3 workers");
    ExperimentResult again = run_experiment(c);
    res.check(summary_json(threaded) == summary_json(again),
              "identical summary for a repeated run of the same config");
  }

  // The recentering projector is a projector and kills the ones direction.
  {
    const std::size_t n = 50;
    Matrix p = row_sum_projector(n);
    Matrix pp = p * p;
    double idems = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) idems = std::max(idems, std::abs(pp(i, j) - p(i, j)));
    Vector ones(n, Complex(1.0, 0.0));
    Vector image = p.apply(ones);
    double killed = 0.0;
    for (Complex v : image) killed = std::max(killed, std::abs(v));
    res.check(idems <= 1e-12 && killed <= 1e-12,
              "P*P = P to " + num(idems) + " and P * ones = 0 to " + num(killed));
  }

  // Every perturbed singular-value chain interlaces under a rank-one update.
  {
    SeedPolicy seed{5150};
    bool all_hold = true;
    double worst = 0.0;
    for (int i = 0; i < 50; ++i) {
      std::size_t n = 4 + static_cast<std::size_t>(i % 30);
      Matrix m = sample_iid_matrix(n, AtomDistribution::gaussian_complex(), seed,
                                   static_cast<std::uint64_t>(i));
      Rng r = seed.stream(static_cast<std::uint64_t>(i), 1);
      Vector u(n), v(n);
      for (Complex& x : u) x = r.gaussian_complex();
      for (Complex& x : v) x = r.gaussian_complex();
      InterlacingReport rep = interlacing_check(m, u, v);
      all_hold = all_hold && rep.holds;
      worst = std::max(worst, rep.max_violation);
    }
    res.check(all_hold, "singular values interlace under 50 random rank-one updates (worst slack " +
                            num(worst) + ")");
  }

  // Winding counts match located zeros for a polynomial with known roots.
  // All three roots (2, 3, -1-2i with modulus sqrt(5)) lie inside [1.5, 4].
  {
    ComplexFn poly = [](Complex z) {
      return (z - Complex(2.0, 0.0)) * (z - Complex(3.0, 0.0)) * (z - Complex(-1.0, -2.0));
    };
    int inside = winding_number(poly, circle_contour(Complex(0.0, 0.0), 4.0, 32), {});
    std::vector<LocatedZero> zs = locate_zeros_annulus(poly, 1.5, 4.0, {}, 1.0);
    const std::array<Complex, 3> roots = {Complex(2.0, 0.0), Complex(3.0, 0.0),
                                          Complex(-1.0, -2.0)};
    bool matched = zs.size() == roots.size();
    for (const Complex& root : roots) {
      bool found = false;
      for (const LocatedZero& z : zs)
        found = found || (std::abs(z.position - root) <= 1e-9 && z.multiplicity == 1);
      matched = matched && found;
    }
    res.check(inside == 3 && matched,
              "winding 3 inside |z|=4 and all 3 roots in [1.5, 4] located (found " +
                  std::to_string(zs.size()) + ")");
  }

  // The truncated random series still obeys its own boundary count.
  {
    TruncationPolicy policy = choose_truncation(1.1, 1e-6, 1e-9, 2.0);
    RandomLaurentSeries s;
    s.mu = 2.0;
    s.field = CoefficientField::real;
    s.policy = policy;
    s.coefficients.assign(static_cast<std::size_t>(policy.certified_order), Complex(0.0, 0.0));
    s.coefficients[0] = Complex(1.5, 0.0);  // f(z) = 1 - 3/z, zero at 3
    std::vector<LocatedZero> zs = series_zeros(s, 1.25, 8.0);
    res.check(zs.size() == 1 && std::abs(zs[0].position - Complex(3.0, 0.0)) <= 1e-9,
              "single-coefficient series zero located at its algebraic position");
  }

  // CSV round-trip and strict config rejection.
  {
    ExperimentConfig c = default_config("fig3");
    c.n = 40;
    c.trials = 3;
    ExperimentResult r = run_experiment(c);
    std::vector<EigenRow> rows = all_rows(r);
    std::vector<EigenRow> back = parse_eigen_csv(render_eigen_csv(rows));
    bool same = back.size() == rows.size();
    for (std::size_t i = 0; same && i < rows.size(); ++i)
      same = back[i].trial == rows[i].trial && back[i].re == rows[i].re &&
             back[i].im == rows[i].im && back[i].kind == rows[i].kind;
    res.check(same, "eigenvalue table round-trips bit for bit");
    bool rejected = false;
    try {
      config_from_json({{"experiment", "fig1"}, {"granularity", 3}});
    } catch (const invalid_argument_error&) {
      rejected = true;
    }
    res.check(rejected, "unknown config fields are rejected");
  }

  // Seed streams for different tags never collide.
  {
    SeedPolicy seed{123};
    Rng a = seed.stream(0, 0), b = seed.stream(0, 1), a2 = seed.stream(0, 0);
    bool distinct = false, stable = true, bounded = true;
    for (int i = 0; i < 64; ++i) {
      double ua = a.uniform01(), ub = b.uniform01();
      distinct = distinct || ua != ub;
      stable = stable && ua == a2.uniform01();
      bounded = bounded && ua >= 0.0 && ua < 1.0 && ub >= 0.0 && ub < 1.0;
    }
    res.check(distinct && stable && bounded,
              "seed streams are tag-separated, replayable, and in range");
  }

  return res;
}

struct CriterionSpec {
  int id;
  std::string title;
  double budget_seconds;  // 0 means no declared budget
  std::function<CriterionResult()> run;
};

inline std::vector<CriterionSpec> criterion_catalog() {
  return {
      {1, "determinant agrees with the dense characteristic-ratio oracle", 30.0,
       determinant_matches_oracle},
      {2, "planted diagonal payload recovered and cross-checked", 120.0,
       planted_diagonal_recovered},
      {3, "mean-shift outlier located with an aligned eigenvector", 120.0,
       mean_shift_located_with_eigenvector},
      {4, "vanishing mean shift still yields the outlier near 2", 600.0,
       vanishing_mean_shift_located},
      {5, "spectral radius and power-norm ratio bands", 0.0, operator_norm_bands},
      {6, "circular law with and without row recentering", 0.0,
       circular_law_with_and_without_recentering},
      {7, "spectrum invariant under orthogonal rank-one updates", 0.0,
       orthogonal_update_invariance},
      {8, "bilinear forms of matrix powers are joint gaussians", 300.0,
       bilinear_forms_are_gaussian},
      {9, "model outlier counts match the limiting random series", 1800.0,
       model_counts_match_series},
      {10, "random power series zero intensity adjudicated", 0.0,
       gaussian_series_intensity_adjudicated},
      {11, "property invariants all green", 0.0, property_invariants_green},
  };
}

}  // namespace acceptance

// Runs every criterion, printing one line per criterion plus indented detail,
// and a final stable "RESULT: pass=N fail=M" line.  Returns the fail count.
inline int run_acceptance(std::ostream& out) {
  int passed = 0, failed = 0;
  for (const acceptance::CriterionSpec& spec : acceptance::criterion_catalog()) {
    auto start = std::chrono::steady_clock::now();
    CriterionResult res;
    try {
      res = spec.run();
    } catch (const std::exception& e) {
      res.pass = false;
      res.details.push_back(std::string("FAIL criterion aborted: ") + e.what());
    }
    double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (spec.budget_seconds > 0.0)
      res.check(secs <= spec.budget_seconds, "completed in " + acceptance::num(secs) +
                                                 "s (budget " +
                                                 acceptance::num(spec.budget_seconds) + "s)");
    (res.pass ? passed : failed)++;
    char line[160];
    std::snprintf(line, sizeof line, "[C%-2d] %-62s %s  (%.1fs)", spec.id, spec.title.c_str(),
                  res.pass ? "PASS" : "FAIL", secs);
    out << line << "\n";
    for (const std::string& d : res.details) out << "       " << d << "\n";
    out.flush();
  }
  out << "RESULT: pass=" << passed << " fail=" << failed << "\n";
  return failed;
}

}  // namespace outlab
