#include "tfqkd/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "json.hpp"

namespace tfqkd {

namespace {

using nlohmann::json;

// JSON has no infinity; clamp sentinel t statistics to a representable value.
double json_safe(double v) {
  if (std::isinf(v)) {
    return v > 0 ? 1e300 : -1e300;
  }
  return v;
}

json mat_json(const Mat4& m, bool clamp_infinities = false) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) {
      row.push_back(clamp_infinities ? json_safe(m(r, c)) : m(r, c));
    }
    rows.push_back(row);
  }
  return rows;
}

Mat4 mat_from_json(const json& value, const std::string& context) {
  if (!value.is_array() || value.size() != 4) {
    throw SchemaError(context + ": expected a 4x4 array");
  }
  Mat4 m;
  for (int r = 0; r < 4; ++r) {
    const json& row = value[static_cast<std::size_t>(r)];
    if (!row.is_array() || row.size() != 4) {
      throw SchemaError(context + ": expected a 4x4 array");
    }
    for (int c = 0; c < 4; ++c) {
      const json& cell = row[static_cast<std::size_t>(c)];
      if (!cell.is_number()) {
        throw SchemaError(context + ": matrix entries must be numbers");
      }
      m(r, c) = cell.get<double>();
    }
  }
  return m;
}

json labels_json(const std::vector<PrepLabel>& labels) {
  json out = json::array();
  for (PrepLabel label : labels) {
    out.push_back(std::string(to_string(label)));
  }
  return out;
}

std::vector<PrepLabel> labels_from_json(const json& value, const std::string& context) {
  if (!value.is_array()) {
    throw SchemaError(context + ": expected an array of labels");
  }
  std::vector<PrepLabel> labels;
  for (const auto& item : value) {
    if (!item.is_string()) {
      throw SchemaError(context + ": labels must be strings");
    }
    try {
      labels.push_back(parse_prep_label(item.get<std::string>()));
    } catch (const ConfigError& err) {
      throw SchemaError(context + ": " + err.what());
    }
  }
  return labels;
}

std::string csv_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", json_safe(v));
  return buf;
}

}  // namespace

std::string message_to_json_line(const Message& message) {
  json j;
  if (const auto* announce = std::get_if<ShotBatchAnnounce>(&message)) {
    j["type"] = "announce";
    j["batch"] = announce->batch_id;
    j["trial"] = announce->trial;
    j["shots"] = announce->shots;
  } else if (const auto* commit = std::get_if<PrepCommit>(&message)) {
    j["type"] = "commit";
    j["batch"] = commit->batch_id;
    j["party"] = std::string(to_string(commit->party));
    j["token"] = commit->token;
  } else if (const auto* detection = std::get_if<DetectionRecord>(&message)) {
    j["type"] = "detect";
    j["batch"] = detection->batch_id;
    j["n_plus"] = detection->counts.n_plus;
    j["n_minus"] = detection->counts.n_minus;
    j["shots"] = detection->counts.shots;
  } else {
    const auto& reveal = std::get<LabelReveal>(message);
    j["type"] = "reveal";
    j["batch"] = reveal.batch_id;
    j["party"] = std::string(to_string(reveal.party));
    j["label"] = std::string(to_string(reveal.label));
  }
  return j.dump();
}

void write_transcript(const std::filesystem::path& path, const std::vector<Message>& transcript) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open transcript file for writing: " + path.string());
  }
  out << "{\"type\":\"header\",\"schema_version\":" << kSchemaVersion << "}\n";
  for (const Message& message : transcript) {
    out << message_to_json_line(message) << "\n";
  }
}

std::string ensemble_to_json_string(const EnsembleFile& file) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["alice_labels"] = labels_json(file.alice_labels);
  j["bob_labels"] = labels_json(file.bob_labels);
  j["a1_selection"] =
      labels_json(std::vector<PrepLabel>(file.a1_selection.begin(), file.a1_selection.end()));
  j["a2_selection"] =
      labels_json(std::vector<PrepLabel>(file.a2_selection.begin(), file.a2_selection.end()));
  j["shots_per_pair"] = file.shots_per_pair;
  j["trials"] = file.ensemble.trials();
  j["phase_jitter_sigma_rad"] = file.phase_jitter_sigma_rad;
  json s1 = json::array();
  json s2 = json::array();
  for (int t = 0; t < file.ensemble.trials(); ++t) {
    s1.push_back(mat_json(file.ensemble.s1[static_cast<std::size_t>(t)]));
    s2.push_back(mat_json(file.ensemble.s2[static_cast<std::size_t>(t)]));
  }
  j["s1"] = s1;
  j["s2"] = s2;
  if (!file.s_full.empty()) {
    j["s_full"] = file.s_full;
  }
  return j.dump(2) + "\n";
}

void write_ensemble(const std::filesystem::path& path, const EnsembleFile& file) {
  std::ofstream out(path);
  if (!out) {
    throw Error("cannot open ensemble file for writing: " + path.string());
  }
  out << ensemble_to_json_string(file);
}

EnsembleFile load_ensemble(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw SchemaError("cannot open ensemble file: " + path.string());
  }
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& err) {
    throw SchemaError(std::string("ensemble file is not valid JSON: ") + err.what());
  }
  if (!j.is_object()) {
    throw SchemaError("ensemble root must be a JSON object");
  }
  for (const char* key : {"schema_version", "alice_labels", "bob_labels", "a1_selection",
                          "a2_selection", "trials", "s1", "s2"}) {
    if (!j.contains(key)) {
      throw SchemaError(std::string("ensemble file is missing field '") + key + "'");
    }
  }
  if (!j["schema_version"].is_number_integer() ||
      j["schema_version"].get<int>() != kSchemaVersion) {
    throw SchemaError("unsupported ensemble schema_version");
  }

  EnsembleFile file;
  file.alice_labels = labels_from_json(j["alice_labels"], "alice_labels");
  file.bob_labels = labels_from_json(j["bob_labels"], "bob_labels");
  const auto a1 = labels_from_json(j["a1_selection"], "a1_selection");
  const auto a2 = labels_from_json(j["a2_selection"], "a2_selection");
  if (a1.size() != 4 || a2.size() != 4) {
    throw SchemaError("selections must contain exactly 4 labels");
  }
  std::copy(a1.begin(), a1.end(), file.a1_selection.begin());
  std::copy(a2.begin(), a2.end(), file.a2_selection.begin());
  if (j.contains("shots_per_pair")) {
    if (!j["shots_per_pair"].is_number_integer()) {
      throw SchemaError("shots_per_pair must be an integer");
    }
    file.shots_per_pair = j["shots_per_pair"].get<long long>();
  }
  if (j.contains("phase_jitter_sigma_rad")) {
    if (!j["phase_jitter_sigma_rad"].is_number()) {
      throw SchemaError("phase_jitter_sigma_rad must be a number");
    }
    file.phase_jitter_sigma_rad = j["phase_jitter_sigma_rad"].get<double>();
  }

  if (!j["trials"].is_number_integer()) {
    throw SchemaError("trials must be an integer");
  }
  const int trials = j["trials"].get<int>();
  if (trials < 2) {
    throw SchemaError("ensemble must contain at least 2 trials");
  }
  const json& s1 = j["s1"];
  const json& s2 = j["s2"];
  if (!s1.is_array() || !s2.is_array() || static_cast<int>(s1.size()) != trials ||
      static_cast<int>(s2.size()) != trials) {
    throw SchemaError("s1/s2 must be arrays with one 4x4 matrix per trial");
  }
  for (int t = 0; t < trials; ++t) {
    file.ensemble.s1.push_back(mat_from_json(s1[static_cast<std::size_t>(t)], "s1"));
    file.ensemble.s2.push_back(mat_from_json(s2[static_cast<std::size_t>(t)], "s2"));
  }
  for (const Mat4& m : file.ensemble.s1) {
    for (double v : m.e) {
      if (!std::isfinite(v)) {
        throw SchemaError("s1 entries must be finite");
      }
    }
  }
  for (const Mat4& m : file.ensemble.s2) {
    for (double v : m.e) {
      if (!std::isfinite(v)) {
        throw SchemaError("s2 entries must be finite");
      }
    }
  }
  return file;
}

std::string detection_report_to_json_string(const DetectionReport& report,
                                             const ExperimentConfig* config_echo) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["m"] = mat_json(report.m);
  j["sigma"] = mat_json(report.sigma);
  j["sigma_trial_only"] = mat_json(report.sigma_trial);
  j["ci_half_width"] = mat_json(report.ci_half_width);
  j["t_stat"] = mat_json(report.t_stat, /*clamp_infinities=*/true);
  j["p_value"] = mat_json(report.p_value);
  j["min_p"] = report.min_p;
  j["verdict"] = std::string(to_string(report.verdict));
  j["t_cutoff"] = report.t_cutoff;
  j["alpha"] = report.alpha;
  j["alpha_effective"] = report.alpha_effective;
  j["bonferroni"] = report.bonferroni;
  j["n_trials"] = report.n_trials;
  j["ci_convention"] = {
      {"t_stat", "M / (sigma / sqrt(N))"},
      {"ci_half_width", "t_cutoff * sigma / sqrt(N)"},
      {"combined_source_form", "t_cutoff * M / (sigma / sqrt(N))"},
  };
  if (config_echo != nullptr) {
    j["config_echo"] = json::parse(config_echo->to_json_string());
  }
  return j.dump(2) + "\n";
}

void write_detection_report(const std::filesystem::path& json_path,
                            const std::filesystem::path& csv_path, const DetectionReport& report,
                            const ExperimentConfig* config_echo) {
  {
    std::ofstream out(json_path);
    if (!out) {
      throw Error("cannot open report file for writing: " + json_path.string());
    }
    out << detection_report_to_json_string(report, config_echo);
  }
  std::ofstream csv(csv_path);
  if (!csv) {
    throw Error("cannot open report CSV for writing: " + csv_path.string());
  }
  csv << "i,j,m,sigma,ci_half_width,t_stat,p_value\n";
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 4; ++c) {
      csv << i << "," << c << "," << csv_number(report.m(i, c)) << ","
          << csv_number(report.sigma(i, c)) << "," << csv_number(report.ci_half_width(i, c)) << ","
          << csv_number(report.t_stat(i, c)) << "," << csv_number(report.p_value(i, c)) << "\n";
    }
  }
}

void write_predict_report(const std::filesystem::path& json_path,
                          const std::filesystem::path& csv_path, const PredictReport& report) {
  {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["m_th"] = mat_json(report.m_th);
    j["sigma_th"] = mat_json(report.sigma_th);
    j["s1_pred"] = mat_json(report.s1_pred);
    j["s2_pred"] = mat_json(report.s2_pred);
    std::ofstream out(json_path);
    if (!out) {
      throw Error("cannot open predict report for writing: " + json_path.string());
    }
    out << j.dump(2) << "\n";
  }
  std::ofstream csv(csv_path);
  if (!csv) {
    throw Error("cannot open predict CSV for writing: " + csv_path.string());
  }
  csv << "i,j,m_th,sigma_th\n";
  for (int i = 0; i < 4; ++i) {
    for (int c = 0; c < 4; ++c) {
      csv << i << "," << c << "," << csv_number(report.m_th(i, c)) << ","
          << csv_number(report.sigma_th(i, c)) << "\n";
    }
  }
}

void write_calibration_report(const std::filesystem::path& json_path,
                              const std::filesystem::path& csv_path,
                              const CalibrationReport& report) {
  {
    json j;
    j["schema_version"] = kSchemaVersion;
    json curves = json::array();
    for (const CalibrationCurve& curve : report.curves) {
      curves.push_back({
          {"bob_offset_rad", curve.bob_offset_rad},
          {"amplitude_mean", curve.amplitude_mean},
          {"amplitude_std", curve.amplitude_std},
          {"phase_mean_rad", curve.phase_mean},
          {"phase_std_rad", curve.phase_std},
          {"offset_mean", curve.offset_mean},
          {"offset_std", curve.offset_std},
          {"residual_rms_mean", curve.residual_rms_mean},
          {"bob_offset_estimate_rad", curve.bob_offset_estimate_rad},
      });
    }
    j["curves"] = curves;
    j["pooled_phase_std_rad"] = report.pooled_phase_std;
    std::ofstream out(json_path);
    if (!out) {
      throw Error("cannot open calibration report for writing: " + json_path.string());
    }
    out << j.dump(2) << "\n";
  }
  std::ofstream csv(csv_path);
  if (!csv) {
    throw Error("cannot open calibration CSV for writing: " + csv_path.string());
  }
  csv << "bob_offset_rad,repetition,drive,s\n";
  for (const auto& point : report.scan) {
    csv << csv_number(point.bob_offset_rad) << "," << point.repetition << ","
        << csv_number(point.drive) << "," << csv_number(point.value) << "\n";
  }
}

}  // namespace tfqkd
