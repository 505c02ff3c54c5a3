#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tfqkd/harness.hpp"
#include "tfqkd/measurement.hpp"
#include "tfqkd/state.hpp"

namespace tfqkd {

inline constexpr int kSchemaVersion = 1;

// Flat experiment configuration. JSON keys carry units in their names;
// unknown keys are rejected on load.
struct ExperimentConfig {
  Schedule schedule;
  PhasePlan plan;
  InterferometerModel model;

  std::uint64_t seed = 42;
  double alpha = 0.05;
  bool bonferroni = false;
  int resamples = 1000;
  double condition_number_bound = kDefaultConditionBound;

  double drive_to_phase_scale = 1.0;
  int calibration_drive_points = 32;
  long long calibration_shots_per_point = 100000;
  int calibration_repetitions = 10;
  bool calibration_noiseless = false;

  std::string transcript_filename = "transcript.ndjson";
  std::string ensemble_filename = "ensemble.json";
  std::string report_basename = "detection_report";
  std::string predict_basename = "predict_report";
  std::string calibration_basename = "calibration_report";

  // Re-validates every module-level invariant. Throws ConfigError (or
  // DegenerateSetError for label selections that cannot be inverted).
  void validate() const;

  // Advisory strings (signal level above the operating regime, ...).
  std::vector<std::string> warnings() const;

  std::string to_json_string() const;
  static ExperimentConfig from_json_string(const std::string& text);

  void save(const std::filesystem::path& path) const;
  static ExperimentConfig load(const std::filesystem::path& path);
};

}  // namespace tfqkd
