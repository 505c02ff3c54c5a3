#include "tfqkd/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "tfqkd/io.hpp"

using namespace tfqkd;

namespace {

namespace fs = std::filesystem;
constexpr double kPi = std::numbers::pi;

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tfqkd_cmd_tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig desk_config() {
  ExperimentConfig config;
  config.schedule.shots_per_pair = 20000;
  config.schedule.trials = 4;
  config.resamples = 50;
  return config;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path);
  REQUIRE(in);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

nlohmann::json load_json(const fs::path& path) { return nlohmann::json::parse(slurp(path)); }

}  // namespace

TEST_CASE("simulate writes deterministic transcript and ensemble files") {
  const ExperimentConfig config = desk_config();
  const fs::path dir_a = fresh_dir("sim_a");
  const fs::path dir_b = fresh_dir("sim_b");
  CHECK(cmd_simulate(config, {dir_a, 1}) == kExitOk);
  CHECK(cmd_simulate(config, {dir_b, 1}) == kExitOk);
  CHECK(slurp(dir_a / "transcript.ndjson") == slurp(dir_b / "transcript.ndjson"));
  CHECK(slurp(dir_a / "ensemble.json") == slurp(dir_b / "ensemble.json"));

  const EnsembleFile file = load_ensemble(dir_a / "ensemble.json");
  CHECK(file.ensemble.trials() == 4);
  CHECK(file.alice_labels.size() == 5);
}

TEST_CASE("simulate is byte-identical across thread counts") {
  const ExperimentConfig config = desk_config();
  const fs::path serial = fresh_dir("sim_serial");
  const fs::path parallel = fresh_dir("sim_parallel");
  CHECK(cmd_simulate(config, {serial, 1}) == kExitOk);
  CHECK(cmd_simulate(config, {parallel, 4}) == kExitOk);
  CHECK(slurp(serial / "transcript.ndjson") == slurp(parallel / "transcript.ndjson"));
  CHECK(slurp(serial / "ensemble.json") == slurp(parallel / "ensemble.json"));
}

TEST_CASE("detect exits 0 on clean data and 1 on injected error") {
  ExperimentConfig clean = desk_config();
  clean.schedule.shots_per_pair = 100000;
  clean.schedule.trials = 10;
  clean.bonferroni = true;  // keep the clean-run false-alarm rate low
  const fs::path clean_dir = fresh_dir("detect_clean");
  REQUIRE(cmd_simulate(clean, {clean_dir, 1}) == kExitOk);
  CHECK(cmd_detect(clean_dir / "ensemble.json", clean, {clean_dir, 1}) == kExitOk);

  ExperimentConfig err = clean;
  err.bonferroni = false;
  err.schedule.shots_per_pair = 1000000;
  err.plan.correlated_offsets_rad[PrepLabel::kMinusX] = kPi / 30.0;
  const fs::path err_dir = fresh_dir("detect_err");
  REQUIRE(cmd_simulate(err, {err_dir, 1}) == kExitOk);
  CHECK(cmd_detect(err_dir / "ensemble.json", err, {err_dir, 1}) == kExitDetected);

  const auto report = load_json(err_dir / "detection_report.json");
  CHECK(report["verdict"] == "error-detected");
  CHECK(report["min_p"].get<double>() < 1e-3);
  CHECK(report["n_trials"] == 10);
  // The analysis configuration is echoed into the report.
  CHECK(report["config_echo"]["shots_per_pair"] == 1000000);
  CHECK(report["config_echo"]["alpha"].get<double>() == doctest::Approx(0.05));
}

TEST_CASE("detect rejects malformed ensembles") {
  const ExperimentConfig config = desk_config();
  const fs::path dir = fresh_dir("detect_bad");

  {
    std::ofstream out(dir / "truncated.json");
    out << R"({"schema_version": 1, "alice_labels": ["+X")";
  }
  CHECK(cmd_detect(dir / "truncated.json", config, {dir, 1}) == kExitBadInput);

  {
    std::ofstream out(dir / "missing.json");
    out << R"({"schema_version": 1})";
  }
  CHECK(cmd_detect(dir / "missing.json", config, {dir, 1}) == kExitBadInput);
  CHECK(cmd_detect(dir / "absent.json", config, {dir, 1}) == kExitBadInput);
}

TEST_CASE("detect report is deterministic for a fixed seed") {
  ExperimentConfig config = desk_config();
  const fs::path dir = fresh_dir("detect_deterministic");
  REQUIRE(cmd_simulate(config, {dir, 1}) == kExitOk);
  REQUIRE(cmd_detect(dir / "ensemble.json", config, {dir, 1}) >= 0);
  const std::string first = slurp(dir / "detection_report.json");
  REQUIRE(cmd_detect(dir / "ensemble.json", config, {dir, 1}) >= 0);
  CHECK(slurp(dir / "detection_report.json") == first);
}

TEST_CASE("predict reports zero M for a clean model") {
  ExperimentConfig config = desk_config();
  config.model.detector_imbalance = 0.05;
  config.model.visibility = 0.93;
  config.model.background_rate = 1e-5;
  const fs::path dir = fresh_dir("predict_clean");
  CHECK(cmd_predict(config, {dir, 1}) == kExitOk);
  const auto report = load_json(dir / "predict_report.json");
  double max_abs = 0.0;
  for (const auto& row : report["m_th"]) {
    for (const auto& value : row) {
      max_abs = std::max(max_abs, std::abs(value.get<double>()));
    }
  }
  CHECK(max_abs <= 1e-12);
}

TEST_CASE("predict flags the pi/30 offset and ignores it on the randomized state") {
  ExperimentConfig err = desk_config();
  err.plan.correlated_offsets_rad[PrepLabel::kMinusX] = kPi / 30.0;
  const fs::path dir = fresh_dir("predict_err");
  CHECK(cmd_predict(err, {dir, 1}) == kExitOk);
  auto report = load_json(dir / "predict_report.json");
  CHECK(std::abs(report["m_th"][2][2].get<double>()) > 0.05);

  ExperimentConfig invisible = desk_config();
  invisible.plan.correlated_offsets_rad[PrepLabel::kMinusZ] = kPi / 30.0;
  const fs::path dir_z = fresh_dir("predict_z");
  CHECK(cmd_predict(invisible, {dir_z, 1}) == kExitOk);
  report = load_json(dir_z / "predict_report.json");
  double max_abs = 0.0;
  for (const auto& row : report["m_th"]) {
    for (const auto& value : row) {
      max_abs = std::max(max_abs, std::abs(value.get<double>()));
    }
  }
  CHECK(max_abs <= 1e-12);
}

TEST_CASE("predict flags a measurement-side offset keyed to an alice label") {
  // A phase offset inside Charlie's measurement that fires only for one of
  // Alice's labels is a correlated error and must surface in M_th.
  ExperimentConfig config = desk_config();
  config.model.measurement_offsets_rad[PrepLabel::kPlusY] = kPi / 30.0;
  const fs::path dir = fresh_dir("predict_meas_offset");
  CHECK(cmd_predict(config, {dir, 1}) == kExitOk);
  const auto report = load_json(dir / "predict_report.json");
  double max_abs = 0.0;
  for (const auto& row : report["m_th"]) {
    for (const auto& value : row) {
      max_abs = std::max(max_abs, std::abs(value.get<double>()));
    }
  }
  CHECK(max_abs > 1e-4);
}

TEST_CASE("calibrate recovers the bob offsets exactly in noiseless mode") {
  ExperimentConfig config = desk_config();
  config.calibration_noiseless = true;
  const fs::path dir = fresh_dir("calibrate_noiseless");
  CHECK(cmd_calibrate(config, {dir, 1}) == kExitOk);
  const auto report = load_json(dir / "calibration_report.json");
  const double expected[4] = {0.0, kPi / 2.0, kPi, 3.0 * kPi / 2.0};
  int index = 0;
  for (const auto& curve : report["curves"]) {
    double err = std::abs(curve["bob_offset_estimate_rad"].get<double>() - expected[index]);
    err = std::min(err, std::abs(err - 2.0 * kPi));
    CHECK(err < 1e-6);
    CHECK(curve["amplitude_mean"].get<double>() == doctest::Approx(0.99).epsilon(1e-6));
    ++index;
  }
  CHECK(report["pooled_phase_std_rad"].get<double>() < 1e-9);
}

TEST_CASE("calibrate fails with exit 3 when the scan cannot be fitted") {
  ExperimentConfig config = desk_config();
  config.calibration_drive_points = 2;
  const fs::path dir = fresh_dir("calibrate_degenerate");
  CHECK(cmd_calibrate(config, {dir, 1}) == kExitDegenerate);
}

TEST_CASE("cli binary honours the exit-code contract") {
  const fs::path dir = fresh_dir("cli");
  ExperimentConfig config = desk_config();
  config.save(dir / "config.json");

  ExperimentConfig degenerate = desk_config();
  degenerate.schedule.a1_selection = {PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                                      PrepLabel::kMinusY};
  // Serialize without validation: write the JSON by hand.
  {
    std::ofstream out(dir / "degenerate.json");
    out << R"({"a1_selection": ["+X", "-X", "+Y", "-Y"]})";
  }
  {
    std::ofstream out(dir / "zero_shots.json");
    out << R"({"shots_per_pair": 0})";
  }

  const std::string binary = TFQKD_CLI_BINARY;
  auto run = [&](const std::string& args) {
    const std::string cmd = binary + " " + args + " > /dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
  };

  CHECK(run("simulate --config " + (dir / "config.json").string() + " --out " + dir.string()) ==
        kExitOk);
  CHECK(run("simulate --config " + (dir / "degenerate.json").string() + " --out " + dir.string()) ==
        kExitDegenerate);
  CHECK(run("simulate --config " + (dir / "zero_shots.json").string() + " --out " + dir.string()) ==
        kExitBadInput);
  CHECK(run("predict --config " + (dir / "config.json").string() + " --out " + dir.string()) ==
        kExitOk);
  CHECK(run("detect --config " + (dir / "config.json").string() + " --ensemble " +
            (dir / "ensemble.json").string() + " --out " + dir.string()) <= kExitDetected);
  CHECK(run("detect --config " + (dir / "config.json").string() + " --ensemble " +
            (dir / "no_such_file.json").string() + " --out " + dir.string()) == kExitBadInput);
}
