// exchange-lattice: run configured experiments on the energy-exchange chain.
//
//   exchange-lattice run --config exp.json [--threads K] [--seed S] [--output-dir D]
//   exchange-lattice list-models
//
// Exit codes: 0 success, 2 configuration error, 3 runtime failure.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "exchange_lattice/experiment.hpp"

namespace el = exchange_lattice;

namespace {

int fail(int code, const std::string& kind, const std::string& message) {
  std::cerr << el::json{{"error", kind}, {"message", message}}.dump() << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Energy-exchange lattice simulator"};
  app.require_subcommand(1);
  app.set_version_flag("--version", EXCHANGE_LATTICE_VERSION);

  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  std::string config_path;
  std::size_t threads = el::default_threads();
  std::optional<std::uint64_t> seed;
  std::optional<std::string> output_dir;
  run->add_option("--config", config_path, "Experiment config (JSON)")->required();
  run->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  run->add_option("--seed", seed, "Override the config seed");
  run->add_option("--output-dir", output_dir, "Override the config output directory");

  auto* list = app.add_subcommand("list-models", "List kernels, rates and experiment types");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  if (list->parsed()) {
    std::cout << el::list_models();
    return 0;
  }

  el::ExperimentConfig cfg;
  try {
    cfg = el::load_config(config_path);
    if (seed) {
      cfg.seed = *seed;
      cfg.canonical["seed"] = *seed;
    }
    if (output_dir) cfg.output_dir = *output_dir;
  } catch (const el::ConfigError& e) {
    return fail(2, "config_error", e.what());
  }

  try {
    const auto manifest = el::run_experiment(cfg, el::RunOptions{threads});
    std::cout << el::json(manifest).dump(2) << '\n';
  } catch (const std::exception& e) {
    return fail(3, "runtime_error", e.what());
  }
  return 0;
}
