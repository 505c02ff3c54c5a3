#include "tfqkd/config.hpp"

#include <cmath>
#include <fstream>
#include <set>

#include "json.hpp"

namespace tfqkd {

namespace {

using nlohmann::json;

std::vector<PrepLabel> parse_label_list(const json& value, const std::string& key) {
  if (!value.is_array()) {
    throw ConfigError("field '" + key + "' must be an array of labels");
  }
  std::vector<PrepLabel> labels;
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw ConfigError("field '" + key + "' must contain label strings");
    }
    labels.push_back(parse_prep_label(item.get<std::string>()));
  }
  return labels;
}

std::array<PrepLabel, 4> parse_label_quad(const json& value, const std::string& key) {
  const auto labels = parse_label_list(value, key);
  if (labels.size() != 4) {
    throw ConfigError("field '" + key + "' must contain exactly 4 labels");
  }
  return {labels[0], labels[1], labels[2], labels[3]};
}

std::map<PrepLabel, double> parse_offset_map(const json& value, const std::string& key) {
  if (!value.is_object()) {
    throw ConfigError("field '" + key + "' must be an object mapping labels to radians");
  }
  std::map<PrepLabel, double> offsets;
  for (const auto& [label_text, offset] : value.items()) {
    if (!offset.is_number()) {
      throw ConfigError("field '" + key + "." + label_text + "' must be a number");
    }
    offsets[parse_prep_label(label_text)] = offset.get<double>();
  }
  return offsets;
}

json label_list_json(const std::vector<PrepLabel>& labels) {
  json out = json::array();
  for (PrepLabel label : labels) {
    out.push_back(std::string(to_string(label)));
  }
  return out;
}

json label_quad_json(const std::array<PrepLabel, 4>& labels) {
  return label_list_json(std::vector<PrepLabel>(labels.begin(), labels.end()));
}

json offset_map_json(const std::map<PrepLabel, double>& offsets) {
  json out = json::object();
  for (const auto& [label, offset] : offsets) {
    out[std::string(to_string(label))] = offset;
  }
  return out;
}

template <typename T>
T require_type(const json& value, const std::string& key);

template <>
double require_type<double>(const json& value, const std::string& key) {
  if (!value.is_number()) {
    throw ConfigError("field '" + key + "' must be a number");
  }
  return value.get<double>();
}

template <>
long long require_type<long long>(const json& value, const std::string& key) {
  if (!value.is_number_integer()) {
    throw ConfigError("field '" + key + "' must be an integer");
  }
  return value.get<long long>();
}

template <>
int require_type<int>(const json& value, const std::string& key) {
  if (!value.is_number_integer()) {
    throw ConfigError("field '" + key + "' must be an integer");
  }
  return value.get<int>();
}

template <>
std::uint64_t require_type<std::uint64_t>(const json& value, const std::string& key) {
  if (!value.is_number_unsigned() && !value.is_number_integer()) {
    throw ConfigError("field '" + key + "' must be a non-negative integer");
  }
  return value.get<std::uint64_t>();
}

template <>
bool require_type<bool>(const json& value, const std::string& key) {
  if (!value.is_boolean()) {
    throw ConfigError("field '" + key + "' must be a boolean");
  }
  return value.get<bool>();
}

template <>
std::string require_type<std::string>(const json& value, const std::string& key) {
  if (!value.is_string()) {
    throw ConfigError("field '" + key + "' must be a string");
  }
  return value.get<std::string>();
}

}  // namespace

void ExperimentConfig::validate() const {
  plan.validate();
  model.validate();
  schedule.validate(plan, condition_number_bound);
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw ConfigError("alpha must lie in (0, 1)");
  }
  if (resamples < 1) {
    throw ConfigError("resamples must be >= 1");
  }
  if (!(condition_number_bound > 1.0)) {
    throw ConfigError("condition_number_bound must be > 1");
  }
  if (!(drive_to_phase_scale != 0.0) || !std::isfinite(drive_to_phase_scale)) {
    throw ConfigError("drive_to_phase_scale must be finite and nonzero");
  }
  if (calibration_drive_points < 2) {
    throw ConfigError("calibration_drive_points must be >= 2");
  }
  if (calibration_shots_per_point < 1) {
    throw ConfigError("calibration_shots_per_point must be >= 1");
  }
  if (calibration_repetitions < 2) {
    throw ConfigError("calibration_repetitions must be >= 2");
  }
  for (const std::string* name : {&transcript_filename, &ensemble_filename, &report_basename,
                                  &predict_basename, &calibration_basename}) {
    if (name->empty()) {
      throw ConfigError("output file names must not be empty");
    }
  }
}

std::vector<std::string> ExperimentConfig::warnings() const {
  std::vector<std::string> out;
  model.validate(&out);
  return out;
}

std::string ExperimentConfig::to_json_string() const {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["alice_labels"] = label_list_json(schedule.alice_labels);
  j["bob_labels"] = label_list_json(schedule.bob_labels);
  j["a1_selection"] = label_quad_json(schedule.a1_selection);
  j["a2_selection"] = label_quad_json(schedule.a2_selection);
  j["shots_per_pair"] = schedule.shots_per_pair;
  j["trials"] = schedule.trials;
  j["phase_jitter_sigma_rad"] = plan.phase_jitter_sigma_rad;
  j["correlated_offsets_rad"] = offset_map_json(plan.correlated_offsets_rad);
  j["visibility"] = model.visibility;
  j["mean_photons_per_pulse"] = model.mean_photons_per_pulse;
  j["detector_imbalance"] = model.detector_imbalance;
  j["background_rate"] = model.background_rate;
  j["measurement_offsets_rad"] = offset_map_json(model.measurement_offsets_rad);
  j["seed"] = seed;
  j["alpha"] = alpha;
  j["bonferroni"] = bonferroni;
  j["resamples"] = resamples;
  j["condition_number_bound"] = condition_number_bound;
  j["drive_to_phase_scale"] = drive_to_phase_scale;
  j["calibration_drive_points"] = calibration_drive_points;
  j["calibration_shots_per_point"] = calibration_shots_per_point;
  j["calibration_repetitions"] = calibration_repetitions;
  j["calibration_noiseless"] = calibration_noiseless;
  j["transcript_filename"] = transcript_filename;
  j["ensemble_filename"] = ensemble_filename;
  j["report_basename"] = report_basename;
  j["predict_basename"] = predict_basename;
  j["calibration_basename"] = calibration_basename;
  return j.dump(2) + "\n";
}

ExperimentConfig ExperimentConfig::from_json_string(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw ConfigError(std::string("config is not valid JSON: ") + err.what());
  }
  if (!j.is_object()) {
    throw ConfigError("config root must be a JSON object");
  }

  static const std::set<std::string> known_keys = {
      "schema_version",
      "alice_labels",
      "bob_labels",
      "a1_selection",
      "a2_selection",
      "shots_per_pair",
      "trials",
      "phase_jitter_sigma_rad",
      "correlated_offsets_rad",
      "visibility",
      "mean_photons_per_pulse",
      "detector_imbalance",
      "background_rate",
      "measurement_offsets_rad",
      "seed",
      "alpha",
      "bonferroni",
      "resamples",
      "condition_number_bound",
      "drive_to_phase_scale",
      "calibration_drive_points",
      "calibration_shots_per_point",
      "calibration_repetitions",
      "calibration_noiseless",
      "transcript_filename",
      "ensemble_filename",
      "report_basename",
      "predict_basename",
      "calibration_basename",
  };
  for (const auto& [key, value] : j.items()) {
    if (known_keys.count(key) == 0) {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }

  ExperimentConfig cfg;
  if (j.contains("schema_version") &&
      require_type<int>(j["schema_version"], "schema_version") != kSchemaVersion) {
    throw ConfigError("unsupported schema_version (expected " + std::to_string(kSchemaVersion) + ")");
  }
  if (j.contains("alice_labels")) {
    cfg.schedule.alice_labels = parse_label_list(j["alice_labels"], "alice_labels");
  }
  if (j.contains("bob_labels")) {
    cfg.schedule.bob_labels = parse_label_list(j["bob_labels"], "bob_labels");
  }
  if (j.contains("a1_selection")) {
    cfg.schedule.a1_selection = parse_label_quad(j["a1_selection"], "a1_selection");
  }
  if (j.contains("a2_selection")) {
    cfg.schedule.a2_selection = parse_label_quad(j["a2_selection"], "a2_selection");
  }
  if (j.contains("shots_per_pair")) {
    cfg.schedule.shots_per_pair = require_type<long long>(j["shots_per_pair"], "shots_per_pair");
  }
  if (j.contains("trials")) {
    cfg.schedule.trials = require_type<int>(j["trials"], "trials");
  }
  if (j.contains("phase_jitter_sigma_rad")) {
    cfg.plan.phase_jitter_sigma_rad =
        require_type<double>(j["phase_jitter_sigma_rad"], "phase_jitter_sigma_rad");
  }
  if (j.contains("correlated_offsets_rad")) {
    cfg.plan.correlated_offsets_rad =
        parse_offset_map(j["correlated_offsets_rad"], "correlated_offsets_rad");
  }
  if (j.contains("visibility")) {
    cfg.model.visibility = require_type<double>(j["visibility"], "visibility");
  }
  if (j.contains("mean_photons_per_pulse")) {
    cfg.model.mean_photons_per_pulse =
        require_type<double>(j["mean_photons_per_pulse"], "mean_photons_per_pulse");
  }
  if (j.contains("detector_imbalance")) {
    cfg.model.detector_imbalance = require_type<double>(j["detector_imbalance"], "detector_imbalance");
  }
  if (j.contains("background_rate")) {
    cfg.model.background_rate = require_type<double>(j["background_rate"], "background_rate");
  }
  if (j.contains("measurement_offsets_rad")) {
    cfg.model.measurement_offsets_rad =
        parse_offset_map(j["measurement_offsets_rad"], "measurement_offsets_rad");
  }
  if (j.contains("seed")) {
    cfg.seed = require_type<std::uint64_t>(j["seed"], "seed");
  }
  if (j.contains("alpha")) {
    cfg.alpha = require_type<double>(j["alpha"], "alpha");
  }
  if (j.contains("bonferroni")) {
    cfg.bonferroni = require_type<bool>(j["bonferroni"], "bonferroni");
  }
  if (j.contains("resamples")) {
    cfg.resamples = require_type<int>(j["resamples"], "resamples");
  }
  if (j.contains("condition_number_bound")) {
    cfg.condition_number_bound =
        require_type<double>(j["condition_number_bound"], "condition_number_bound");
  }
  if (j.contains("drive_to_phase_scale")) {
    cfg.drive_to_phase_scale = require_type<double>(j["drive_to_phase_scale"], "drive_to_phase_scale");
  }
  if (j.contains("calibration_drive_points")) {
    cfg.calibration_drive_points =
        require_type<int>(j["calibration_drive_points"], "calibration_drive_points");
  }
  if (j.contains("calibration_shots_per_point")) {
    cfg.calibration_shots_per_point =
        require_type<long long>(j["calibration_shots_per_point"], "calibration_shots_per_point");
  }
  if (j.contains("calibration_repetitions")) {
    cfg.calibration_repetitions =
        require_type<int>(j["calibration_repetitions"], "calibration_repetitions");
  }
  if (j.contains("calibration_noiseless")) {
    cfg.calibration_noiseless = require_type<bool>(j["calibration_noiseless"], "calibration_noiseless");
  }
  if (j.contains("transcript_filename")) {
    cfg.transcript_filename = require_type<std::string>(j["transcript_filename"], "transcript_filename");
  }
  if (j.contains("ensemble_filename")) {
    cfg.ensemble_filename = require_type<std::string>(j["ensemble_filename"], "ensemble_filename");
  }
  if (j.contains("report_basename")) {
    cfg.report_basename = require_type<std::string>(j["report_basename"], "report_basename");
  }
  if (j.contains("predict_basename")) {
    cfg.predict_basename = require_type<std::string>(j["predict_basename"], "predict_basename");
  }
  if (j.contains("calibration_basename")) {
    cfg.calibration_basename =
        require_type<std::string>(j["calibration_basename"], "calibration_basename");
  }

  cfg.validate();
  return cfg;
}

void ExperimentConfig::save(const std::filesystem::path& path) const {
  std::ofstream out(path);
  if (!out) {
    throw ConfigError("cannot open config file for writing: " + path.string());
  }
  out << to_json_string();
}

ExperimentConfig ExperimentConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return from_json_string(text);
}

}  // namespace tfqkd
