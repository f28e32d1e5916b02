#include <cstdlib>
#include <filesystem>
#include <string>
#include <vector>

#include "catch_amalgamated.hpp"
#include "outlab/experiments.hpp"

using namespace outlab;

TEST_CASE("eigenvalue table renders and parses back exactly", "[experiments]") {
  std::vector<EigenRow> rows;
  rows.push_back({0, 1.0 / 3.0, -2.0e-17, "bulk", 1});
  rows.push_back({0, 2.9999999999999996, 1.0, "outlier", 2});
  rows.push_back({7, -1e300, 4.9406564584124654e-324, "bulk", 1});
  std::string text = render_eigen_csv(rows);
  std::vector<EigenRow> back = parse_eigen_csv(text);
  REQUIRE(back.size() == rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    REQUIRE(back[i].trial == rows[i].trial);
    REQUIRE(back[i].re == rows[i].re);  // bit-exact through 17 significant digits
    REQUIRE(back[i].im == rows[i].im);
    REQUIRE(back[i].kind == rows[i].kind);
    REQUIRE(back[i].multiplicity == rows[i].multiplicity);
  }

  REQUIRE(render_eigen_csv({}) == std::string(kEigenCsvHeader) + "\n");
  REQUIRE(parse_eigen_csv(render_eigen_csv({})).empty());

  REQUIRE_THROWS_AS(parse_eigen_csv("re,im\n"), io_error);
  REQUIRE_THROWS_AS(parse_eigen_csv(std::string(kEigenCsvHeader) + "\n1,2,3\n"), io_error);
  REQUIRE_THROWS_AS(parse_eigen_csv(std::string(kEigenCsvHeader) + "\n0,x,0,bulk,1\n"), io_error);
  REQUIRE_THROWS_AS(parse_eigen_csv(std::string(kEigenCsvHeader) + "\n0,1,0,edge,1\n"), io_error);
  REQUIRE_THROWS_AS(parse_eigen_csv(std::string(kEigenCsvHeader) + "\n0,1,0,bulk,0\n"), io_error);
}

TEST_CASE("full-precision rendering round-trips awkward doubles", "[experiments]") {
  for (double v : {1.0 / 3.0, -0.1, 1e-300, 9007199254740993.0, 2.2250738585072014e-308,
                   -123456789.123456789, 0.0}) {
    std::string s = format_full(v);
    REQUIRE(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("experiment defaults mirror the headline runs", "[experiments]") {
  ExperimentConfig f1 = default_config("fig1");
  REQUIRE(f1.n == 200);
  REQUIRE(f1.trials == 20);
  REQUIRE(f1.diag.size() == 3);
  REQUIRE(f1.diag[0] == Complex(2.0, 1.0));
  REQUIRE(f1.epsilon == 0.1);

  ExperimentConfig f5 = default_config("fig5");
  REQUIRE(f5.n == 500);
  REQUIRE(f5.trials == 200);
  REQUIRE(f5.mu == 2.0);
  REQUIRE(f5.p == 0.25);
  REQUIRE(f5.epsilon == 0.15);

  ExperimentConfig c = default_config("clt");
  REQUIRE(c.n == 2000);
  REQUIRE(c.trials == 400);
  REQUIRE(c.j_max == 2);

  ExperimentConfig f4 = default_config("fig4");
  REQUIRE(f4.mu * std::sqrt(static_cast<double>(f4.n)) == Catch::Approx(2.0).epsilon(1e-12));

  REQUIRE_THROWS_AS(default_config("fig2"), invalid_argument_error);
}

TEST_CASE("config json is strict about keys and types", "[experiments]") {
  nlohmann::json j = {{"experiment", "fig1"}, {"n", 64},          {"trials", 4},
                      {"master_seed", 99},    {"epsilon", 0.12},  {"emit_svg", true},
                      {"workers", 2},         {"out_dir", "/tmp/x"}};
  ExperimentConfig c = config_from_json(j);
  REQUIRE(c.n == 64);
  REQUIRE(c.trials == 4);
  REQUIRE(c.master_seed == 99);
  REQUIRE(c.epsilon == 0.12);
  REQUIRE(c.emit_svg);
  REQUIRE(c.workers == 2);
  REQUIRE(c.diag.size() == 3);  // fig1 defaults fill whatever the file omits

  // diag accepts plain numbers and [re, im] pairs
  nlohmann::json jd = {{"experiment", "fig1"}, {"diag", {3.0, {2.0, 1.0}}}};
  ExperimentConfig cd = config_from_json(jd);
  REQUIRE(cd.diag == std::vector<Complex>{Complex(3.0, 0.0), Complex(2.0, 1.0)});

  REQUIRE_THROWS_AS(config_from_json({{"experiment", "fig1"}, {"granularity", 3}}),
                    invalid_argument_error);
  REQUIRE_THROWS_AS(config_from_json({{"experiment", "fig1"}, {"n", "big"}}),
                    invalid_argument_error);
  REQUIRE_THROWS_AS(config_from_json({{"n", 10}}), invalid_argument_error);
  REQUIRE_THROWS_AS(config_from_json({{"experiment", "fig1"}, {"atom", "cauchy"}}),
                    invalid_argument_error);
  REQUIRE_THROWS_AS(config_from_json(nlohmann::json::array()), invalid_argument_error);

  // the echo of a config parses back to the identical echo
  ExperimentConfig full = default_config("laurent_compare");
  full.out_dir = "somewhere";
  full.workers = 3;
  REQUIRE(config_to_json(config_from_json(config_to_json(full))) == config_to_json(full));
}

TEST_CASE("experiment validation rejects bad parameter combinations", "[experiments]") {
  ExperimentConfig c = default_config("fig1");
  c.diag.clear();
  REQUIRE_THROWS_AS(run_experiment(c), invalid_argument_error);

  ExperimentConfig f3 = default_config("fig3");
  f3.mu = 0.0;
  REQUIRE_THROWS_AS(run_experiment(f3), invalid_argument_error);

  ExperimentConfig f5 = default_config("fig5");
  f5.p = 1.0;
  REQUIRE_THROWS_AS(run_experiment(f5), invalid_argument_error);

  ExperimentConfig bad = default_config("clt");
  bad.experiment = "clt2";
  REQUIRE_THROWS_AS(run_experiment(bad), invalid_argument_error);
}

TEST_CASE("trial pool records failures without stopping the run", "[experiments]") {
  auto recs = detail::run_trial_pool(9, 3, [](long t, TrialRecord& rec) {
    if (t % 2 == 1) throw contour_error("odd trial");
    rec.stats["value"] = t * 10;
  });
  REQUIRE(recs.size() == 9);
  for (long t = 0; t < 9; ++t) {
    REQUIRE(recs[static_cast<std::size_t>(t)].trial == t);
    if (t % 2 == 1) {
      REQUIRE(recs[static_cast<std::size_t>(t)].failed);
      REQUIRE(recs[static_cast<std::size_t>(t)].error == "odd trial");
    } else {
      REQUIRE(recs[static_cast<std::size_t>(t)].stats["value"] == t * 10);
    }
  }

  ExperimentConfig c = default_config("fig1");
  c.trials = 0;
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.trials.empty());
  REQUIRE(r.exit_code() == 0);
  REQUIRE(all_rows(r).empty());
}

TEST_CASE("worker count never changes the output bytes", "[experiments]") {
  ExperimentConfig c = default_config("fig1");
  c.n = 40;
  c.trials = 6;
  c.diag = {Complex(2.5, 0.0), Complex(0.0, 2.5)};
  c.workers = 1;
  ExperimentResult serial = run_experiment(c);
  c.workers = 3;
  ExperimentResult threaded = run_experiment(c);

  REQUIRE(render_eigen_csv(all_rows(serial)) == render_eigen_csv(all_rows(threaded)));
  REQUIRE(serial.aggregate == threaded.aggregate);
  for (std::size_t i = 0; i < serial.trials.size(); ++i)
    REQUIRE(serial.trials[i].stats == threaded.trials[i].stats);
}

TEST_CASE("planted diagonal payload is recovered and cross-checked", "[experiments]") {
  ExperimentConfig c = default_config("fig1");
  c.n = 80;
  c.trials = 5;
  c.diag = {Complex(2.0, 1.0), Complex(3.0, 0.0)};
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.failed_trials() == 0);
  REQUIRE(r.aggregate["recovery_fraction"].get<double>() == 1.0);
  REQUIRE(r.aggregate["dense_max_distance"].get<double>() <= 1e-6);
  REQUIRE_FALSE(r.aggregate["dense_count_mismatch"].get<bool>());
  REQUIRE(r.band_pass);

  long bulk = 0, outlier = 0;
  for (const EigenRow& row : all_rows(r)) (row.kind == "bulk" ? bulk : outlier)++;
  REQUIRE(outlier == 2 * c.trials);
  REQUIRE(bulk == static_cast<long>(c.n) * c.trials - outlier);

  std::string svg = render_scatter_svg(all_rows(r), detail::svg_predictions(c), c.n);
  std::size_t pred = 0, pos = 0;
  while ((pos = svg.find("class=\"prediction\"", pos)) != std::string::npos) {
    ++pred;
    pos += 10;
  }
  REQUIRE(pred == 2);
  REQUIRE(svg.find("class=\"outlier\"") != std::string::npos);
  REQUIRE(svg.find("class=\"bulk\"") != std::string::npos);
  REQUIRE(svg.find("stroke-dasharray") != std::string::npos);  // the unit circle
}

TEST_CASE("mean shift run locates the payload and aligns the eigenvector", "[experiments]") {
  ExperimentConfig c = default_config("fig3");
  c.n = 60;
  c.trials = 6;
  c.mu = 1.2;  // payload at 1.2*sqrt(60), far outside the bulk
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.failed_trials() == 0);
  REQUIRE(r.aggregate["recovery_fraction"].get<double>() >= 5.0 / 6.0);
  for (const TrialRecord& t : r.trials) {
    REQUIRE(t.stats.contains("eigenvector_distance"));
    REQUIRE(t.stats["eigenvector_distance"].get<double>() <= 0.3);
  }
}

TEST_CASE("recentered rows keep the spectrum a disk", "[experiments]") {
  ExperimentConfig c = default_config("zero_row_sum");
  c.n = 120;
  c.trials = 3;
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.failed_trials() == 0);
  REQUIRE(r.aggregate["radial_ks_p90"].get<double>() <= 0.1);
  REQUIRE(r.aggregate["eigenvalues_beyond_region_total"].get<long>() == 0);
  for (const TrialRecord& t : r.trials) {
    REQUIRE(t.stats["least_singular_at_0"].get<double>() > 0.0);
    REQUIRE(t.stats["spectral_radius"].get<double>() <= 1.3);
  }
}

TEST_CASE("norm bands report the cube gap honestly", "[experiments]") {
  ExperimentConfig c = default_config("norms");
  c.n = 150;
  c.trials = 2;
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.failed_trials() == 0);
  // The first two powers sit inside the declared band; the third cannot,
  // because the norm's true limit is ((m+1)^(m+1)/m^m)^(1/2), below 0.8*(m+1)
  // at m = 3.  The run must say so rather than hide it.
  const auto& bands = r.aggregate["power_norm_bands"];
  REQUIRE(bands[0]["pass"].get<bool>());
  REQUIRE_FALSE(bands[2]["pass"].get<bool>());
  REQUIRE(bands[2]["measured_limit_over_m_plus_1"].get<double>() ==
          Catch::Approx(0.7698003589).epsilon(1e-9));
  REQUIRE_FALSE(r.band_pass);
}

TEST_CASE("bilinear form trials store gaussian statistics", "[experiments]") {
  ExperimentConfig c = default_config("clt");
  c.n = 120;
  c.trials = 80;
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.failed_trials() == 0);
  const auto& orders = r.aggregate["per_order"];
  REQUIRE(orders.size() == 2);
  for (const auto& o : orders) {
    REQUIRE(o["variance"].get<double>() >= 0.5);
    REQUIRE(o["variance"].get<double>() <= 1.5);
  }
  REQUIRE(std::abs(r.aggregate["corr_12"].get<double>()) <= 0.4);

  ExperimentResult again = run_experiment(c);
  REQUIRE(summary_json(r) == summary_json(again));
}

TEST_CASE("model outliers and the limiting series count alike", "[experiments]") {
  ExperimentConfig c = default_config("laurent_compare");
  c.n = 60;
  c.trials = 10;
  c.stability_trials = 5;
  c.series_trials = 40;
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.aggregate["model"]["mean_count"].get<double>() > 0.0);
  REQUIRE(r.aggregate["series"]["mean_count"].get<double>() > 0.0);
  REQUIRE(r.aggregate["model"]["bins"].size() == 4);
  REQUIRE(r.aggregate["series_order"].get<int>() >= 1);
  for (const EigenRow& row : all_rows(r)) {
    REQUIRE(row.kind == "outlier");
    REQUIRE(row.multiplicity >= 1);
  }
  REQUIRE(r.checks.size() == 3);
}

TEST_CASE("power series zero counts adjudicate the intensity", "[experiments]") {
  ExperimentConfig c = default_config("gps_check");
  c.trials = 800;
  c.gaf_order = 80;
  ExperimentResult r = run_experiment(c);
  REQUIRE(r.failed_trials() == 0);
  // The count means must follow the squared kernel's integral, not the
  // plain one: at radius 0.7 the two differ by a factor of two.
  REQUIRE(r.aggregate["matched_intensity"] == "squared");
  const auto& bands = r.aggregate["bands"];
  REQUIRE(bands[2]["rel_error_squared"].get<double>() <= 0.15);
  REQUIRE(bands[2]["rel_error_stated"].get<double>() > 0.3);
  REQUIRE(r.band_pass);
}

TEST_CASE("outputs land in the requested directory", "[experiments]") {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "outlab_exp_out_test";
  fs::remove_all(dir);

  ExperimentConfig c = default_config("fig1");
  c.n = 30;
  c.trials = 2;
  c.diag = {Complex(2.5, 0.0)};
  c.emit_svg = true;
  ExperimentResult r = run_experiment(c);
  std::vector<std::string> written = write_outputs(r, dir.string());
  REQUIRE(written.size() == 3);
  REQUIRE(fs::exists(dir / "eigenvalues.csv"));
  REQUIRE(fs::exists(dir / "summary.json"));
  REQUIRE(fs::exists(dir / "scatter.svg"));

  std::vector<EigenRow> back = parse_eigen_csv(read_text_file((dir / "eigenvalues.csv").string()));
  REQUIRE(back.size() == all_rows(r).size());
  nlohmann::json summary = nlohmann::json::parse(read_text_file((dir / "summary.json").string()));
  REQUIRE(summary["experiment"] == "fig1");
  REQUIRE(summary["n_trials"] == 2);
  REQUIRE(summary["library"]["version"].get<std::string>() == library_version);
  fs::remove_all(dir);

  REQUIRE_THROWS_AS(write_outputs(r, "/proc/no_such_place/out"), io_error);
}

TEST_CASE("worker resolution honors the environment contract", "[experiments]") {
  char* saved = std::getenv("OUTLAB_WORKERS");
  std::string saved_value = saved ? saved : "";

  REQUIRE(resolve_workers(2) == 2);
  unsetenv("OUTLAB_WORKERS");
  REQUIRE(resolve_workers(0) == 1);
  setenv("OUTLAB_WORKERS", "3", 1);
  REQUIRE(resolve_workers(0) == 3);
  REQUIRE(resolve_workers(5) == 5);  // an explicit request outranks the environment
  setenv("OUTLAB_WORKERS", "0", 1);
  REQUIRE_THROWS_AS(resolve_workers(0), invalid_argument_error);
  setenv("OUTLAB_WORKERS", "many", 1);
  REQUIRE_THROWS_AS(resolve_workers(0), invalid_argument_error);

  if (saved)
    setenv("OUTLAB_WORKERS", saved_value.c_str(), 1);
  else
    unsetenv("OUTLAB_WORKERS");
}
