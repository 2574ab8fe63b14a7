#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "conslab/experiment.hpp"
#include "conslab/graph.hpp"

namespace {

constexpr int kExitConfigError = 2;
constexpr int kExitNumericalError = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "conslab: spectral analysis, consensus control synthesis and attack "
      "simulation for grounded multi-agent networks"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;

  const char* commands[] = {"scaling", "platoon", "loss", "recovery", "bounds"};
  const char* blurbs[] = {
      "eigenratio versus network size for a regular family",
      "vehicle-string disturbance rejection, grounded and leaderless",
      "consensus followed by a grounding that breaks consensusability",
      "regaining consensusability by grounding additional nodes",
      "spectral bound checks across a seeded graph family"};
  for (int i = 0; i < 5; ++i) {
    CLI::App* sub = app.add_subcommand(commands[i], blurbs[i]);
    sub->add_option("--config", config_path, "experiment config file");
    sub->add_option("--seed", seed_override, "override the config seed");
    sub->add_option("--out", out_dir, "output directory (default: .)");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitConfigError;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    conslab::ExperimentConfig cfg;
    if (!config_path.empty())
      cfg = conslab::ExperimentConfig::load(config_path);
    conslab::run_experiment(command, cfg, seed_override, out_dir, std::cout);
  } catch (const conslab::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfigError;
  } catch (const conslab::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return kExitNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
