#include "tfqkd/stats.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace tfqkd {

namespace {

constexpr double kTinyPivot = 1e-300;
constexpr int kMaxBetaIterations = 20000;
constexpr double kBetaTolerance = 1e-15;

// Lentz continued fraction for the incomplete beta function.
double beta_continued_fraction(double a, double b, double x) {
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTinyPivot) {
    d = kTinyPivot;
  }
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxBetaIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTinyPivot) {
      d = kTinyPivot;
    }
    c = 1.0 + aa / c;
    if (std::abs(c) < kTinyPivot) {
      c = kTinyPivot;
    }
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTinyPivot) {
      d = kTinyPivot;
    }
    c = 1.0 + aa / c;
    if (std::abs(c) < kTinyPivot) {
      c = kTinyPivot;
    }
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) <= kBetaTolerance) {
      return h;
    }
  }
  throw Error("regularized_incomplete_beta: continued fraction failed to converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw Error("regularized_incomplete_beta: a and b must be > 0");
  }
  if (!(x >= 0.0 && x <= 1.0)) {
    throw Error("regularized_incomplete_beta: x must lie in [0, 1]");
  }
  if (x == 0.0) {
    return 0.0;
  }
  if (x == 1.0) {
    return 1.0;
  }
  const double log_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                           a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double t_tail_probability(double t, int dof) {
  if (dof < 1) {
    throw Error("t_tail_probability: dof must be >= 1");
  }
  if (std::isnan(t)) {
    throw Error("t_tail_probability: t must not be NaN");
  }
  if (std::isinf(t)) {
    return 0.0;
  }
  const double nu = static_cast<double>(dof);
  const double x = nu / (nu + t * t);
  return regularized_incomplete_beta(nu / 2.0, 0.5, x);
}

double t_critical(double alpha, int dof) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw Error("t_critical: alpha must lie in (0, 1)");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (t_tail_probability(hi, dof) > alpha) {
    hi *= 2.0;
    if (hi > 1e12) {
      throw Error("t_critical: failed to bracket the cutoff");
    }
  }
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (t_tail_probability(mid, dof) > alpha) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

EnsembleStats ensemble_m(const TrialEnsemble& ensemble, const std::array<PrepLabel, 4>& a1_labels,
                         const std::array<PrepLabel, 4>& a2_labels, double phase_sigma, int resamples,
                         RngStream& stream, double condition_bound) {
  const int n = ensemble.trials();
  if (n < 2) {
    throw Error("ensemble_m: need at least 2 trials");
  }
  if (static_cast<int>(ensemble.s2.size()) != n) {
    throw Error("ensemble_m: s1/s2 trial counts differ");
  }
  if (resamples < 1) {
    throw Error("ensemble_m: resamples must be >= 1");
  }
  const int r_eff = phase_sigma > 0.0 ? resamples : 1;
  const PhasePlan nominal_plan;  // analysis side: nominal phases, no offsets

  const PrepMatrix a1_nominal = build_prep_matrix(a1_labels, nominal_plan, false, 0.0, true, condition_bound);
  const PrepMatrix a2_nominal = build_prep_matrix(a2_labels, nominal_plan, false, 0.0, true, condition_bound);

  // All per-(trial, resample) M matrices; kept so the spread can be computed
  // in a second pass, which keeps a deterministic ensemble at exactly zero.
  std::vector<std::vector<Mat4>> per_trial(static_cast<std::size_t>(n));
  std::vector<Mat4> nominal_per_trial(static_cast<std::size_t>(n));
  for (int t = 0; t < n; ++t) {
    const Mat4& s1 = ensemble.s1[static_cast<std::size_t>(t)];
    const Mat4& s2 = ensemble.s2[static_cast<std::size_t>(t)];
    nominal_per_trial[static_cast<std::size_t>(t)] =
        deviation_matrix(a1_nominal, s1, a2_nominal, s2, condition_bound);
    auto& row = per_trial[static_cast<std::size_t>(t)];
    row.reserve(static_cast<std::size_t>(r_eff));
    for (int r = 0; r < r_eff; ++r) {
      if (phase_sigma > 0.0) {
        const double drift = stream.gaussian(phase_sigma);
        const PrepMatrix a1 = build_prep_matrix(a1_labels, nominal_plan, true, drift, true, condition_bound);
        const PrepMatrix a2 = build_prep_matrix(a2_labels, nominal_plan, true, drift, true, condition_bound);
        row.push_back(deviation_matrix(a1, s1, a2, s2, condition_bound));
      } else {
        row.push_back(nominal_per_trial[static_cast<std::size_t>(t)]);
      }
    }
  }

  EnsembleStats stats;
  // Identical samples (analytic ensembles) have exactly zero spread; the
  // mean-based pass would report 1-ulp residue instead.
  bool all_equal = true;
  for (const auto& row : per_trial) {
    for (const Mat4& m : row) {
      if (!(m == per_trial.front().front())) {
        all_equal = false;
        break;
      }
    }
    if (!all_equal) {
      break;
    }
  }
  if (all_equal) {
    stats.m = per_trial.front().front();
    return stats;
  }

  for (const auto& row : per_trial) {
    for (const Mat4& m : row) {
      stats.m = stats.m + m;
    }
  }
  stats.m = (1.0 / static_cast<double>(n * r_eff)) * stats.m;

  // sigma^2 = sum over trials of the resample-averaged squared deviation,
  // divided by N - 1.
  for (const auto& row : per_trial) {
    Mat4 acc;
    for (const Mat4& m : row) {
      for (std::size_t i = 0; i < 16; ++i) {
        const double d = m.e[i] - stats.m.e[i];
        acc.e[i] += d * d;
      }
    }
    for (std::size_t i = 0; i < 16; ++i) {
      stats.sigma.e[i] += acc.e[i] / static_cast<double>(r_eff);
    }
  }
  for (std::size_t i = 0; i < 16; ++i) {
    stats.sigma.e[i] = std::sqrt(stats.sigma.e[i] / static_cast<double>(n - 1));
  }

  Mat4 nominal_mean;
  for (const Mat4& m : nominal_per_trial) {
    nominal_mean = nominal_mean + m;
  }
  nominal_mean = (1.0 / static_cast<double>(n)) * nominal_mean;
  for (const Mat4& m : nominal_per_trial) {
    for (std::size_t i = 0; i < 16; ++i) {
      const double d = m.e[i] - nominal_mean.e[i];
      stats.sigma_trial.e[i] += d * d;
    }
  }
  for (std::size_t i = 0; i < 16; ++i) {
    stats.sigma_trial.e[i] = std::sqrt(stats.sigma_trial.e[i] / static_cast<double>(n - 1));
  }
  return stats;
}

std::string_view to_string(Verdict verdict) {
  return verdict == Verdict::kErrorDetected ? "error-detected" : "consistent-with-zero";
}

DetectionReport detection_report(const Mat4& m, const Mat4& sigma, int n_trials, double alpha,
                                 bool bonferroni) {
  if (n_trials < 2) {
    throw Error("detection_report: n_trials must be >= 2");
  }
  for (double s : sigma.e) {
    if (!(s >= 0.0)) {
      throw Error("detection_report: sigma entries must be >= 0");
    }
  }
  constexpr double kAnalyticZero = 1e-12;  // |M| below this with sigma == 0 is exact zero
  constexpr double kMinP = 1e-300;

  DetectionReport report;
  report.m = m;
  report.sigma = sigma;
  report.alpha = alpha;
  report.bonferroni = bonferroni;
  report.alpha_effective = bonferroni ? alpha / 16.0 : alpha;
  report.n_trials = n_trials;
  const int dof = n_trials - 1;
  report.t_cutoff = t_critical(report.alpha_effective, dof);

  const double root_n = std::sqrt(static_cast<double>(n_trials));
  report.min_p = 1.0;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      const double sij = sigma(i, j);
      const double mij = m(i, j);
      double t = 0.0;
      double p = 1.0;
      double ci = 0.0;
      if (sij > 0.0) {
        t = mij / (sij / root_n);
        p = std::max(t_tail_probability(t, dof), kMinP);
        ci = report.t_cutoff * sij / root_n;
      } else if (std::abs(mij) > kAnalyticZero) {
        t = mij > 0.0 ? std::numeric_limits<double>::infinity()
                      : -std::numeric_limits<double>::infinity();
        p = kMinP;
      }
      report.t_stat(i, j) = t;
      report.p_value(i, j) = p;
      report.ci_half_width(i, j) = ci;
      report.min_p = std::min(report.min_p, p);
    }
  }
  report.verdict = report.min_p < report.alpha_effective ? Verdict::kErrorDetected
                                                         : Verdict::kConsistentWithZero;
  return report;
}

}  // namespace tfqkd
