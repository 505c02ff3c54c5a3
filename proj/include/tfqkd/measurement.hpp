#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "tfqkd/pauli.hpp"
#include "tfqkd/rng.hpp"
#include "tfqkd/state.hpp"

namespace tfqkd {

// Abstract model of Charlie's interference measurement. measurement_offsets
// is the Charlie-side correlated-error hook: an extra phase applied inside
// the measurement whenever Alice sent the keyed label.
struct InterferometerModel {
  double visibility = 0.99;
  double mean_photons_per_pulse = 0.005;
  double detector_imbalance = 0.0;
  double background_rate = 0.0;
  std::map<PrepLabel, double> measurement_offsets_rad;

  double measurement_offset(PrepLabel alice_label) const;

  // Throws InvalidModelError on unphysical parameters; appends advisory
  // strings (e.g. signal level above the intended operating regime) when a
  // warning sink is provided.
  void validate(std::vector<std::string>* warnings = nullptr) const;
};

struct ClickProbabilities {
  double p_plus = 0.0;
  double p_minus = 0.0;
};

// Per-shot click probabilities for the two detectors given the encoded
// phases. With zero imbalance and background the implied expectation
// (p+ - p-)/(p+ + p-) is visibility * cos(theta_a - theta_b + offset).
// Throws InvalidModelError if the parameters push a probability out of [0,1].
ClickProbabilities click_probabilities(double theta_a, double theta_b, const InterferometerModel& model,
                                       PrepLabel alice_label);

struct CountRecord {
  long long n_plus = 0;
  long long n_minus = 0;
  long long shots = 0;

  friend bool operator==(const CountRecord& a, const CountRecord& b) = default;
};

// Aggregate Poisson counts for one batch of shots. Deterministic given the
// stream. At the sub-0.01 photons-per-pulse operating point the per-shot
// Bernoulli process is Poisson to negligible error.
CountRecord simulate_counts(double theta_a, double theta_b, const InterferometerModel& model,
                            PrepLabel alice_label, long long shots, RngStream& stream);

// (N+ - N-)/(N+ + N-). Throws NoCountsError when both counters are zero.
double estimate_expectation(const CountRecord& counts);

// Exact model expectation for one (Alice label, Bob label) cell: the
// count-weighted ratio, with MinusZ summed over its four slot sub-batches.
double predict_cell_expectation(PrepLabel alice_label, PrepLabel bob_label, const PhasePlan& plan,
                                const InterferometerModel& model, double trial_drift = 0.0);

// Monte-Carlo estimate of the theoretically expected M-matrix uncertainty:
// resample expectation entries with Poisson noise at `mean_counts` photons
// per cell and the analysis-side A matrices with the session drift, then
// recompute M each time. Rows present in both selections share one noise
// draw, mirroring the shared measurements. Pass mean_counts = infinity for
// the noise-free limit. Requires resamples >= 100.
Mat4 theoretical_sigma(const Mat4& s1_pred, const Mat4& s2_pred,
                       const std::array<PrepLabel, 4>& a1_labels,
                       const std::array<PrepLabel, 4>& a2_labels, double mean_counts,
                       double phase_sigma, int resamples, RngStream& stream,
                       double condition_bound = kDefaultConditionBound);

struct FitSample {
  double drive = 0.0;
  double value = 0.0;
  double weight = 1.0;
};

struct SinusoidFit {
  double amplitude = 0.0;
  double phase = 0.0;
  double offset = 0.0;
  double residual_rms = 0.0;
};

// Weighted least-squares fit of value(v) = amplitude*cos(k*v + phase) + offset
// with known drive-to-phase scale k, via linear regression on cos/sin/constant
// regressors. Throws FitDegenerateError when fewer than 6 samples are given
// or the regressor system is singular.
SinusoidFit fit_sinusoid(std::span<const FitSample> samples, double drive_to_phase_scale);

}  // namespace tfqkd
