#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "tfqkd/config.hpp"
#include "tfqkd/harness.hpp"
#include "tfqkd/stats.hpp"

namespace tfqkd {

// ---- transcript (line-delimited JSON, one record per message) ----

std::string message_to_json_line(const Message& message);
void write_transcript(const std::filesystem::path& path, const std::vector<Message>& transcript);

// ---- ensemble file (per-trial S1/S2 matrices plus label metadata) ----

struct EnsembleFile {
  std::vector<PrepLabel> alice_labels;
  std::vector<PrepLabel> bob_labels;
  std::array<PrepLabel, 4> a1_selection{};
  std::array<PrepLabel, 4> a2_selection{};
  long long shots_per_pair = 0;
  double phase_jitter_sigma_rad = 0.0;
  TrialEnsemble ensemble;
  // Full per-trial tables (rows follow alice_labels) kept for audit.
  std::vector<std::vector<std::vector<double>>> s_full;
};

std::string ensemble_to_json_string(const EnsembleFile& file);
void write_ensemble(const std::filesystem::path& path, const EnsembleFile& file);
EnsembleFile load_ensemble(const std::filesystem::path& path);  // throws SchemaError

// ---- detection / prediction reports ----

std::string detection_report_to_json_string(const DetectionReport& report,
                                             const ExperimentConfig* config_echo = nullptr);
void write_detection_report(const std::filesystem::path& json_path,
                            const std::filesystem::path& csv_path, const DetectionReport& report,
                            const ExperimentConfig* config_echo = nullptr);

struct PredictReport {
  Mat4 m_th;
  Mat4 sigma_th;
  Mat4 s1_pred;
  Mat4 s2_pred;
};

void write_predict_report(const std::filesystem::path& json_path,
                          const std::filesystem::path& csv_path, const PredictReport& report);

// ---- calibration report ----

struct CalibrationCurve {
  double bob_offset_rad = 0.0;
  double amplitude_mean = 0.0;
  double amplitude_std = 0.0;
  double phase_mean = 0.0;  // circular mean of fitted phases
  double phase_std = 0.0;   // circular std of fitted phases
  double offset_mean = 0.0;
  double offset_std = 0.0;
  double residual_rms_mean = 0.0;
  double bob_offset_estimate_rad = 0.0;  // wrapped to [0, 2*pi)
};

struct CalibrationReport {
  std::vector<CalibrationCurve> curves;
  double pooled_phase_std = 0.0;
  // One row per (curve, repetition, drive point) for plotting.
  struct ScanPoint {
    double bob_offset_rad;
    int repetition;
    double drive;
    double value;
  };
  std::vector<ScanPoint> scan;
};

void write_calibration_report(const std::filesystem::path& json_path,
                              const std::filesystem::path& csv_path,
                              const CalibrationReport& report);

}  // namespace tfqkd
