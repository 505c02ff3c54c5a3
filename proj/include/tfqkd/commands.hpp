#pragma once

#include <filesystem>

#include "tfqkd/config.hpp"

namespace tfqkd {

struct CommandOptions {
  std::filesystem::path out_dir = ".";
  int threads = 1;
};

// Exit codes shared by the commands and the CLI:
//   0 success (for detect: measurements consistent with zero)
//   1 detect only: correlated error detected
//   2 malformed or invalid configuration / input file
//   3 degenerate preparation set, singular matrix, or degenerate fit
//   4 other runtime failure
inline constexpr int kExitOk = 0;
inline constexpr int kExitDetected = 1;
inline constexpr int kExitBadInput = 2;
inline constexpr int kExitDegenerate = 3;
inline constexpr int kExitRuntime = 4;

// Simulates the full experiment and writes the message transcript and the
// per-trial ensemble file into out_dir.
int cmd_simulate(const ExperimentConfig& config, const CommandOptions& options);

// Runs the M-matrix statistics on a simulated (or externally produced)
// ensemble file; writes the detection report (JSON + CSV) and prints the
// min-p verdict on stdout.
int cmd_detect(const std::filesystem::path& ensemble_path, const ExperimentConfig& config,
               const CommandOptions& options);

// Writes the noise-free M prediction and its theoretically expected
// uncertainty for the configured error model.
int cmd_predict(const ExperimentConfig& config, const CommandOptions& options);

// Simulates phase-scan calibration curves, fits them, and reports the fit
// parameter statistics across repetitions.
int cmd_calibrate(const ExperimentConfig& config, const CommandOptions& options);

}  // namespace tfqkd
