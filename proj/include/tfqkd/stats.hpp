#pragma once

#include <array>

#include "tfqkd/harness.hpp"
#include "tfqkd/pauli.hpp"
#include "tfqkd/rng.hpp"
#include "tfqkd/state.hpp"

namespace tfqkd {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation with the standard symmetry split. Relative accuracy ~1e-13 for
// the parameter ranges used here (a = dof/2 up to 5e3, b = 1/2).
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T_dof| >= |t|) of Student's t-distribution.
double t_tail_probability(double t, int dof);

// Two-sided critical value: t with t_tail_probability(t, dof) == alpha.
double t_critical(double alpha, int dof);

// Ensemble mean of M with its uncertainty. sigma folds the per-trial spread
// together with the session phase drift, resampled `resamples` times per
// trial through the analysis-side A matrices; sigma_trial is the plain trial
// spread (nominal A matrices) reported for the decomposition.
struct EnsembleStats {
  Mat4 m;
  Mat4 sigma;
  Mat4 sigma_trial;
};

EnsembleStats ensemble_m(const TrialEnsemble& ensemble, const std::array<PrepLabel, 4>& a1_labels,
                         const std::array<PrepLabel, 4>& a2_labels, double phase_sigma,
                         int resamples, RngStream& stream,
                         double condition_bound = kDefaultConditionBound);

enum class Verdict { kConsistentWithZero, kErrorDetected };

std::string_view to_string(Verdict verdict);

// Full detection decision for one experiment.
struct DetectionReport {
  Mat4 m;
  Mat4 sigma;
  Mat4 sigma_trial;
  Mat4 ci_half_width;
  Mat4 t_stat;
  Mat4 p_value;
  double min_p = 1.0;
  Verdict verdict = Verdict::kConsistentWithZero;
  double t_cutoff = 0.0;
  double alpha = 0.05;
  double alpha_effective = 0.05;
  bool bonferroni = false;
  int n_trials = 0;
};

// Per-element t statistics, p-values and confidence intervals from the
// ensemble mean and standard deviation of M over n_trials trials:
//   t = M / (sigma / sqrt(N)),   CI half-width = t_cutoff * sigma / sqrt(N).
// Elements with sigma == 0 are exact: |M| below 1e-12 counts as zero (t = 0,
// p = 1); otherwise t is +/-infinity and p is floored at 1e-300. The verdict
// is error-detected iff any confidence interval excludes zero, equivalently
// min_p < alpha (alpha/16 with the Bonferroni option).
DetectionReport detection_report(const Mat4& m, const Mat4& sigma, int n_trials, double alpha,
                                 bool bonferroni = false);

}  // namespace tfqkd
