#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "outlab/acceptance.hpp"
#include "outlab/experiments.hpp"

namespace {

constexpr int kExitTrialFailures = 1;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;

struct RunFlags {
  std::string experiment;
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  long trials = 0;
  int workers = 0;
  bool svg = false;
};

int do_run(const RunFlags& flags, const CLI::App& cmd) {
  outlab::ExperimentConfig cfg;
  try {
    if (!flags.config_path.empty()) {
      std::string text;
      try {
        text = outlab::read_text_file(flags.config_path);
      } catch (const outlab::io_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitIo;
      }
      nlohmann::json j;
      try {
        j = nlohmann::json::parse(text);
      } catch (const nlohmann::json::parse_error& e) {
        std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
        return kExitUsage;
      }
      cfg = outlab::config_from_json(j);
      if (cmd.count("--experiment") && flags.experiment != cfg.experiment) {
        std::cerr << "error: --experiment " << flags.experiment
                  << " contradicts the config file's '" << cfg.experiment << "'\n";
        return kExitUsage;
      }
    } else if (cmd.count("--experiment")) {
      cfg = outlab::default_config(flags.experiment);
    } else {
      std::cerr << "error: run needs --experiment or --config\n";
      return kExitUsage;
    }

    // Command-line flags override whatever the file said.
    if (cmd.count("--seed")) cfg.master_seed = flags.seed;
    if (cmd.count("--trials")) cfg.trials = flags.trials;
    if (cmd.count("--out")) cfg.out_dir = flags.out_dir;
    if (cmd.count("--svg")) cfg.emit_svg = true;
    if (cmd.count("--workers")) cfg.workers = flags.workers;
    if (cfg.out_dir.empty()) {
      std::cerr << "error: run needs an output directory (--out or out_dir in the config)\n";
      return kExitUsage;
    }
    outlab::validate_config(cfg);
  } catch (const outlab::invalid_argument_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }

  try {
    outlab::ExperimentResult result = outlab::run_experiment(cfg);
    std::vector<std::string> written = outlab::write_outputs(result, cfg.out_dir);
    std::cout << result.config.experiment << ": " << result.trials.size() << " trials, "
              << result.failed_trials() << " failed, band_pass="
              << (result.band_pass ? "true" : "false") << "\n";
    for (const std::string& path : written) std::cout << "wrote " << path << "\n";
    if (result.exit_code() != 0)
      std::cerr << "error: more than 10% of the trials failed\n";
    return result.exit_code() == 0 ? 0 : kExitTrialFailures;
  } catch (const outlab::io_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const outlab::invalid_argument_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitTrialFailures;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"outlier spectra of iid matrices under bounded-rank perturbations"};
  app.require_subcommand(1);

  RunFlags flags;
  CLI::App* run = app.add_subcommand("run", "run one experiment and write its outputs");
  run->add_option("--experiment", flags.experiment, "experiment name")
      ->check(CLI::IsMember(outlab::experiment_names()));
  run->add_option("--config", flags.config_path, "JSON config file (strict keys)");
  run->add_option("--seed", flags.seed, "master seed");
  run->add_option("--trials", flags.trials, "number of trials")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--out", flags.out_dir, "output directory");
  run->add_flag("--svg", flags.svg, "also write scatter.svg");
  run->add_option("--workers", flags.workers, "worker threads (default: OUTLAB_WORKERS or 1)")
      ->check(CLI::PositiveNumber);

  std::string suite = "acceptance";
  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("--suite", suite, "suite name (acceptance)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  if (run->parsed()) return do_run(flags, *run);

  if (verify->parsed()) {
    if (suite != "acceptance") {
      std::cerr << "error: unknown suite '" << suite << "' (available: acceptance)\n";
      return kExitUsage;
    }
    int failed = outlab::run_acceptance(std::cout);
    return failed == 0 ? 0 : 1;
  }
  return kExitUsage;
}
