#include "tfqkd/measurement.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tfqkd {

namespace {

constexpr double kProbabilityTolerance = 1e-12;

double clamp01(double p) { return std::clamp(p, 0.0, 1.0); }

}  // namespace

double InterferometerModel::measurement_offset(PrepLabel alice_label) const {
  auto it = measurement_offsets_rad.find(alice_label);
  return it == measurement_offsets_rad.end() ? 0.0 : it->second;
}

void InterferometerModel::validate(std::vector<std::string>* warnings) const {
  if (!(visibility >= 0.0 && visibility <= 1.0)) {
    throw InvalidModelError("visibility must lie in [0, 1]");
  }
  if (!(mean_photons_per_pulse > 0.0) || !std::isfinite(mean_photons_per_pulse)) {
    throw InvalidModelError("mean_photons_per_pulse must be finite and > 0");
  }
  if (!(detector_imbalance > -1.0 && detector_imbalance < 1.0)) {
    throw InvalidModelError("detector_imbalance must lie in (-1, 1)");
  }
  if (!(background_rate >= 0.0) || !std::isfinite(background_rate)) {
    throw InvalidModelError("background_rate must be finite and >= 0");
  }
  for (const auto& [label, offset] : measurement_offsets_rad) {
    if (!std::isfinite(offset)) {
      throw InvalidModelError("measurement offset for " + std::string(to_string(label)) +
                              " must be finite");
    }
  }
  if (warnings != nullptr && mean_photons_per_pulse > 0.01) {
    warnings->push_back("mean_photons_per_pulse " + std::to_string(mean_photons_per_pulse) +
                        " exceeds the intended operating regime (<= 0.01)");
  }
}

ClickProbabilities click_probabilities(double theta_a, double theta_b, const InterferometerModel& model,
                                       PrepLabel alice_label) {
  const double delta = theta_a - theta_b + model.measurement_offset(alice_label);
  const double fringe = model.visibility * std::cos(delta);
  const double raw_plus =
      0.5 * model.mean_photons_per_pulse * (1.0 + model.detector_imbalance + fringe) +
      model.background_rate;
  const double raw_minus =
      0.5 * model.mean_photons_per_pulse * (1.0 - model.detector_imbalance - fringe) +
      model.background_rate;
  if (raw_plus < -kProbabilityTolerance || raw_minus < -kProbabilityTolerance ||
      raw_plus > 1.0 + kProbabilityTolerance || raw_minus > 1.0 + kProbabilityTolerance) {
    throw InvalidModelError("click probability outside [0, 1] at the requested operating point");
  }
  return {clamp01(raw_plus), clamp01(raw_minus)};
}

CountRecord simulate_counts(double theta_a, double theta_b, const InterferometerModel& model,
                            PrepLabel alice_label, long long shots, RngStream& stream) {
  if (shots < 1) {
    throw Error("simulate_counts: shots must be >= 1");
  }
  const ClickProbabilities p = click_probabilities(theta_a, theta_b, model, alice_label);
  CountRecord rec;
  rec.shots = shots;
  rec.n_plus = stream.poisson(static_cast<double>(shots) * p.p_plus);
  rec.n_minus = stream.poisson(static_cast<double>(shots) * p.p_minus);
  return rec;
}

double estimate_expectation(const CountRecord& counts) {
  const long long total = counts.n_plus + counts.n_minus;
  if (total < 1) {
    throw NoCountsError("no detected photons for this preparation pair");
  }
  return static_cast<double>(counts.n_plus - counts.n_minus) / static_cast<double>(total);
}

double predict_cell_expectation(PrepLabel alice_label, PrepLabel bob_label, const PhasePlan& plan,
                                const InterferometerModel& model, double trial_drift) {
  const double theta_b = nominal_phase(bob_label);
  double diff_sum = 0.0;
  double total_sum = 0.0;
  const int slots = alice_label == PrepLabel::kMinusZ ? kMinusZSlotCount : 1;
  for (int slot = 0; slot < slots; ++slot) {
    const double theta_a = apply_error_model(plan, alice_label, slot, trial_drift);
    const ClickProbabilities p = click_probabilities(theta_a, theta_b, model, alice_label);
    diff_sum += p.p_plus - p.p_minus;
    total_sum += p.p_plus + p.p_minus;
  }
  return diff_sum / total_sum;
}

namespace {

// Alice-side row indices of labels present in both selections. Their noise
// draws must coincide: the underlying measurement is shared.
struct SharedRows {
  // in_s2[i] = row of s2 carrying the same label as row i of s1, or -1.
  std::array<int, 4> in_s2{-1, -1, -1, -1};
};

SharedRows find_shared_rows(const std::array<PrepLabel, 4>& a1_labels,
                            const std::array<PrepLabel, 4>& a2_labels) {
  SharedRows shared;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (a1_labels[static_cast<std::size_t>(i)] == a2_labels[static_cast<std::size_t>(j)]) {
        shared.in_s2[static_cast<std::size_t>(i)] = j;
      }
    }
  }
  return shared;
}

double resample_entry(double predicted, double mean_counts, RngStream& stream) {
  if (std::isinf(mean_counts)) {
    return predicted;
  }
  const double s = std::clamp(predicted, -1.0, 1.0);
  const long long n_plus = stream.poisson(mean_counts * (1.0 + s) / 2.0);
  const long long n_minus = stream.poisson(mean_counts * (1.0 - s) / 2.0);
  const long long total = n_plus + n_minus;
  if (total < 1) {
    return 0.0;
  }
  return static_cast<double>(n_plus - n_minus) / static_cast<double>(total);
}

}  // namespace

Mat4 theoretical_sigma(const Mat4& s1_pred, const Mat4& s2_pred,
                       const std::array<PrepLabel, 4>& a1_labels,
                       const std::array<PrepLabel, 4>& a2_labels, double mean_counts,
                       double phase_sigma, int resamples, RngStream& stream, double condition_bound) {
  if (!(mean_counts > 0.0)) {
    throw Error("theoretical_sigma: mean_counts must be > 0");
  }
  if (resamples < 100) {
    throw Error("theoretical_sigma: resamples must be >= 100");
  }
  const SharedRows shared = find_shared_rows(a1_labels, a2_labels);
  const PhasePlan no_offsets;  // analysis side knows nominal phases only

  std::vector<Mat4> samples;
  samples.reserve(static_cast<std::size_t>(resamples));
  for (int r = 0; r < resamples; ++r) {
    const double drift = stream.gaussian(phase_sigma);
    const PrepMatrix a1 = build_prep_matrix(a1_labels, no_offsets, true, drift, true, condition_bound);
    const PrepMatrix a2 = build_prep_matrix(a2_labels, no_offsets, true, drift, true, condition_bound);

    Mat4 s1;
    Mat4 s2;
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) {
        s1(i, j) = resample_entry(s1_pred(i, j), mean_counts, stream);
      }
    }
    for (int i = 0; i < 4; ++i) {
      const int from_s1 = [&] {
        for (int k = 0; k < 4; ++k) {
          if (shared.in_s2[static_cast<std::size_t>(k)] == i) {
            return k;
          }
        }
        return -1;
      }();
      for (int j = 0; j < 4; ++j) {
        s2(i, j) = from_s1 >= 0 ? s1(from_s1, j) : resample_entry(s2_pred(i, j), mean_counts, stream);
      }
    }
    samples.push_back(deviation_matrix(a1, s1, a2, s2, condition_bound));
  }

  // Identical resamples (the noise-free limit) have zero spread by
  // definition; computing it through the mean would leave 1-ulp residue.
  bool all_equal = true;
  for (const Mat4& m : samples) {
    if (!(m == samples.front())) {
      all_equal = false;
      break;
    }
  }
  if (all_equal) {
    return Mat4::zero();
  }

  Mat4 mean;
  for (const Mat4& m : samples) {
    mean = mean + m;
  }
  mean = (1.0 / static_cast<double>(resamples)) * mean;

  Mat4 sigma;
  for (const Mat4& m : samples) {
    for (std::size_t i = 0; i < 16; ++i) {
      const double d = m.e[i] - mean.e[i];
      sigma.e[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < 16; ++i) {
    sigma.e[i] = std::sqrt(sigma.e[i] / static_cast<double>(resamples - 1));
  }
  return sigma;
}

SinusoidFit fit_sinusoid(std::span<const FitSample> samples, double drive_to_phase_scale) {
  if (samples.size() < 6) {
    throw FitDegenerateError("fit_sinusoid: need at least 6 samples spanning one period");
  }

  // Normal equations for regressors (cos(k v), sin(k v), 1).
  double n[3][3] = {};
  double rhs[3] = {};
  for (const FitSample& s : samples) {
    const double w = s.weight;
    if (!(w > 0.0)) {
      throw FitDegenerateError("fit_sinusoid: sample weights must be > 0");
    }
    const double phi = drive_to_phase_scale * s.drive;
    const double reg[3] = {std::cos(phi), std::sin(phi), 1.0};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        n[i][j] += w * reg[i] * reg[j];
      }
      rhs[i] += w * reg[i] * s.value;
    }
  }

  // Partial-pivot elimination on the 3x3 system.
  double scale = 0.0;
  for (auto& row : n) {
    for (double v : row) {
      scale = std::max(scale, std::abs(v));
    }
  }
  const double pivot_floor = std::max(scale, 1.0) * 1e-12;
  int index[3] = {0, 1, 2};
  for (int col = 0; col < 3; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 3; ++r) {
      if (std::abs(n[index[r]][col]) > std::abs(n[index[pivot]][col])) {
        pivot = r;
      }
    }
    std::swap(index[col], index[pivot]);
    const double p = n[index[col]][col];
    if (std::abs(p) <= pivot_floor) {
      throw FitDegenerateError("fit_sinusoid: regressor system is singular (insufficient phase coverage)");
    }
    for (int r = col + 1; r < 3; ++r) {
      const double f = n[index[r]][col] / p;
      for (int c = col; c < 3; ++c) {
        n[index[r]][c] -= f * n[index[col]][c];
      }
      rhs[index[r]] -= f * rhs[index[col]];
    }
  }
  double coeff[3];
  for (int col = 2; col >= 0; --col) {
    double acc = rhs[index[col]];
    for (int c = col + 1; c < 3; ++c) {
      acc -= n[index[col]][c] * coeff[c];
    }
    coeff[col] = acc / n[index[col]][col];
  }

  SinusoidFit fit;
  fit.amplitude = std::hypot(coeff[0], coeff[1]);
  fit.phase = std::atan2(-coeff[1], coeff[0]);
  fit.offset = coeff[2];

  double wsum = 0.0;
  double rss = 0.0;
  for (const FitSample& s : samples) {
    const double phi = drive_to_phase_scale * s.drive;
    const double model = coeff[0] * std::cos(phi) + coeff[1] * std::sin(phi) + coeff[2];
    rss += s.weight * (s.value - model) * (s.value - model);
    wsum += s.weight;
  }
  fit.residual_rms = std::sqrt(rss / wsum);
  return fit;
}

}  // namespace tfqkd
