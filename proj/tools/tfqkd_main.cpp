#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "tfqkd/commands.hpp"

namespace {

// Loads and validates the config, applying the optional seed override.
// Returns nullopt after printing a diagnostic; *exit_code carries the code.
std::optional<tfqkd::ExperimentConfig> load_config(const std::string& path,
                                                   const std::optional<std::uint64_t>& seed_override,
                                                   int* exit_code) {
  try {
    tfqkd::ExperimentConfig config = tfqkd::ExperimentConfig::load(path);
    if (seed_override.has_value()) {
      config.seed = *seed_override;
    }
    for (const std::string& warning : config.warnings()) {
      std::cerr << "warning: " << warning << "\n";
    }
    return config;
  } catch (const tfqkd::DegenerateSetError& err) {
    std::cerr << "error: " << err.what() << "\n";
    *exit_code = tfqkd::kExitDegenerate;
  } catch (const tfqkd::Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    *exit_code = tfqkd::kExitBadInput;
  }
  return std::nullopt;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Twin-field QKD correlated-error detection simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed_override;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "experiment config JSON")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--seed", seed_override, "override the config seed");
  };

  CLI::App* simulate = app.add_subcommand("simulate", "run the three-party experiment simulation");
  add_common(simulate);
  int threads = 1;
  simulate->add_option("--threads", threads, "worker threads for trial simulation")
      ->check(CLI::PositiveNumber);

  CLI::App* detect = app.add_subcommand("detect", "run detection statistics on an ensemble file");
  add_common(detect);
  std::string ensemble_path;
  detect->add_option("--ensemble", ensemble_path, "ensemble file from simulate")->required();
  bool bonferroni = false;
  detect->add_flag("--bonferroni", bonferroni, "use alpha/16 per element");

  CLI::App* predict = app.add_subcommand("predict", "write the analytic M prediction");
  add_common(predict);

  CLI::App* calibrate = app.add_subcommand("calibrate", "simulate and fit phase-scan curves");
  add_common(calibrate);

  CLI11_PARSE(app, argc, argv);

  int exit_code = tfqkd::kExitBadInput;
  std::optional<tfqkd::ExperimentConfig> config = load_config(config_path, seed_override, &exit_code);
  if (!config.has_value()) {
    return exit_code;
  }

  tfqkd::CommandOptions options;
  options.out_dir = out_dir;
  options.threads = threads;

  if (simulate->parsed()) {
    return tfqkd::cmd_simulate(*config, options);
  }
  if (detect->parsed()) {
    if (bonferroni) {
      config->bonferroni = true;
    }
    return tfqkd::cmd_detect(ensemble_path, *config, options);
  }
  if (predict->parsed()) {
    return tfqkd::cmd_predict(*config, options);
  }
  return tfqkd::cmd_calibrate(*config, options);
}
