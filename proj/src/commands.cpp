#include "tfqkd/commands.hpp"

#include <cmath>
#include <iostream>
#include <numbers>

#include "tfqkd/io.hpp"
#include "tfqkd/stats.hpp"

namespace tfqkd {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

template <typename Fn>
int run_guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const DegenerateSetError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitDegenerate;
  } catch (const SingularMatrixError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitDegenerate;
  } catch (const FitDegenerateError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitDegenerate;
  } catch (const SchemaError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitBadInput;
  } catch (const ConfigError& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitBadInput;
  } catch (const Error& err) {
    std::cerr << "error: " << err.what() << "\n";
    return kExitRuntime;
  }
}

double wrap_two_pi(double angle) {
  double wrapped = std::fmod(angle, kTwoPi);
  if (wrapped < 0.0) {
    wrapped += kTwoPi;
  }
  return wrapped;
}

double wrap_pi(double angle) {
  double wrapped = std::fmod(angle + std::numbers::pi, kTwoPi);
  if (wrapped < 0.0) {
    wrapped += kTwoPi;
  }
  return wrapped - std::numbers::pi;
}

// Predicted expectation tables for the configured (possibly error-injected)
// model, rows per selection label, columns per Bob label. Shared labels reuse
// the same row values by construction.
PredictReport build_prediction(const ExperimentConfig& config) {
  const Schedule& schedule = config.schedule;
  PredictReport report;

  auto predicted_row = [&](PrepLabel alice_label) {
    PrepVector row{};
    for (std::size_t j = 0; j < schedule.bob_labels.size(); ++j) {
      row[j] = predict_cell_expectation(alice_label, schedule.bob_labels[j], config.plan, config.model);
    }
    return row;
  };

  for (std::size_t r = 0; r < 4; ++r) {
    report.s1_pred.set_row(static_cast<int>(r), predicted_row(schedule.a1_selection[r]));
    report.s2_pred.set_row(static_cast<int>(r), predicted_row(schedule.a2_selection[r]));
  }

  const PhasePlan nominal;
  const PrepMatrix a1 =
      build_prep_matrix(schedule.a1_selection, nominal, false, 0.0, true, config.condition_number_bound);
  const PrepMatrix a2 =
      build_prep_matrix(schedule.a2_selection, nominal, false, 0.0, true, config.condition_number_bound);
  report.m_th = deviation_matrix(a1, report.s1_pred, a2, report.s2_pred, config.condition_number_bound);

  const double mean_counts =
      static_cast<double>(schedule.shots_per_pair) *
      (config.model.mean_photons_per_pulse + 2.0 * config.model.background_rate);
  RngStream stream(purpose_key(config.seed, StreamPurpose::kTheorySigma));
  report.sigma_th = theoretical_sigma(report.s1_pred, report.s2_pred, schedule.a1_selection,
                                      schedule.a2_selection, mean_counts,
                                      config.plan.phase_jitter_sigma_rad,
                                      std::max(config.resamples, 100), stream,
                                      config.condition_number_bound);
  return report;
}

}  // namespace

int cmd_simulate(const ExperimentConfig& config, const CommandOptions& options) {
  return run_guarded([&] {
    config.validate();
    std::filesystem::create_directories(options.out_dir);

    std::vector<Message> transcript;
    const std::vector<TrialResult> results =
        run_experiment(config.schedule, config.plan, config.model, config.seed, options.threads,
                       &transcript);
    const TrialEnsemble ensemble = assemble_expectations(results, config.schedule);

    EnsembleFile file;
    file.alice_labels = config.schedule.alice_labels;
    file.bob_labels = config.schedule.bob_labels;
    file.a1_selection = config.schedule.a1_selection;
    file.a2_selection = config.schedule.a2_selection;
    file.shots_per_pair = config.schedule.shots_per_pair;
    file.phase_jitter_sigma_rad = config.plan.phase_jitter_sigma_rad;
    file.ensemble = ensemble;
    for (const TrialResult& trial : results) {
      file.s_full.push_back(trial.s_table);
    }

    write_transcript(options.out_dir / config.transcript_filename, transcript);
    write_ensemble(options.out_dir / config.ensemble_filename, file);
    std::cout << "simulated " << results.size() << " trials; wrote "
              << (options.out_dir / config.transcript_filename).string() << " and "
              << (options.out_dir / config.ensemble_filename).string() << "\n";
    return kExitOk;
  });
}

int cmd_detect(const std::filesystem::path& ensemble_path, const ExperimentConfig& config,
               const CommandOptions& options) {
  return run_guarded([&] {
    const EnsembleFile file = load_ensemble(ensemble_path);
    std::filesystem::create_directories(options.out_dir);

    RngStream stream(purpose_key(config.seed, StreamPurpose::kDetectResample));
    const EnsembleStats stats =
        ensemble_m(file.ensemble, file.a1_selection, file.a2_selection,
                   config.plan.phase_jitter_sigma_rad, config.resamples, stream,
                   config.condition_number_bound);
    DetectionReport report =
        detection_report(stats.m, stats.sigma, file.ensemble.trials(), config.alpha, config.bonferroni);
    report.sigma_trial = stats.sigma_trial;

    write_detection_report(options.out_dir / (config.report_basename + ".json"),
                           options.out_dir / (config.report_basename + ".csv"), report, &config);
    std::cout << "min_p=" << report.min_p << " verdict=" << to_string(report.verdict) << "\n";
    return report.verdict == Verdict::kErrorDetected ? kExitDetected : kExitOk;
  });
}

int cmd_predict(const ExperimentConfig& config, const CommandOptions& options) {
  return run_guarded([&] {
    config.validate();
    std::filesystem::create_directories(options.out_dir);
    const PredictReport report = build_prediction(config);
    write_predict_report(options.out_dir / (config.predict_basename + ".json"),
                         options.out_dir / (config.predict_basename + ".csv"), report);
    std::cout << "max |M_th| = " << report.m_th.max_abs() << "\n";
    return kExitOk;
  });
}

int cmd_calibrate(const ExperimentConfig& config, const CommandOptions& options) {
  return run_guarded([&] {
    config.validate();
    std::filesystem::create_directories(options.out_dir);

    const std::array<double, 4> bob_offsets = {0.0, std::numbers::pi / 2.0, std::numbers::pi,
                                               3.0 * std::numbers::pi / 2.0};
    const int points = config.calibration_drive_points;
    const int reps = config.calibration_repetitions;
    const double scale = config.drive_to_phase_scale;
    const double period = kTwoPi / std::abs(scale);

    CalibrationReport report;
    double pooled_variance = 0.0;

    for (std::size_t curve_idx = 0; curve_idx < bob_offsets.size(); ++curve_idx) {
      const double beta = bob_offsets[curve_idx];
      std::vector<SinusoidFit> fits;
      fits.reserve(static_cast<std::size_t>(reps));

      for (int rep = 0; rep < reps; ++rep) {
        RngStream stream(purpose_key(config.seed, StreamPurpose::kCalibration)
                             .with(curve_idx)
                             .with(static_cast<std::uint64_t>(rep)));
        const double drift =
            config.calibration_noiseless ? 0.0 : stream.gaussian(config.plan.phase_jitter_sigma_rad);

        std::vector<FitSample> samples;
        samples.reserve(static_cast<std::size_t>(points));
        for (int i = 0; i < points; ++i) {
          const double drive = period * static_cast<double>(i) / static_cast<double>(points);
          const double theta_a = scale * drive + drift;
          double value = 0.0;
          if (config.calibration_noiseless) {
            const ClickProbabilities p =
                click_probabilities(theta_a, beta, config.model, PrepLabel::kPlusX);
            value = (p.p_plus - p.p_minus) / (p.p_plus + p.p_minus);
          } else {
            const CountRecord counts =
                simulate_counts(theta_a, beta, config.model, PrepLabel::kPlusX,
                                config.calibration_shots_per_point, stream);
            value = estimate_expectation(counts);
          }
          samples.push_back({drive, value, 1.0});
          report.scan.push_back({beta, rep, drive, value});
        }
        fits.push_back(fit_sinusoid(samples, scale));
      }

      CalibrationCurve curve;
      curve.bob_offset_rad = beta;

      double amp_mean = 0.0;
      double off_mean = 0.0;
      double res_mean = 0.0;
      double cos_sum = 0.0;
      double sin_sum = 0.0;
      for (const SinusoidFit& fit : fits) {
        amp_mean += fit.amplitude;
        off_mean += fit.offset;
        res_mean += fit.residual_rms;
        cos_sum += std::cos(fit.phase);
        sin_sum += std::sin(fit.phase);
      }
      const double n = static_cast<double>(fits.size());
      amp_mean /= n;
      off_mean /= n;
      res_mean /= n;
      const double phase_mean = std::atan2(sin_sum, cos_sum);

      double amp_var = 0.0;
      double off_var = 0.0;
      double phase_var = 0.0;
      for (const SinusoidFit& fit : fits) {
        amp_var += (fit.amplitude - amp_mean) * (fit.amplitude - amp_mean);
        off_var += (fit.offset - off_mean) * (fit.offset - off_mean);
        const double d = wrap_pi(fit.phase - phase_mean);
        phase_var += d * d;
      }
      amp_var /= n - 1.0;
      off_var /= n - 1.0;
      phase_var /= n - 1.0;

      curve.amplitude_mean = amp_mean;
      curve.amplitude_std = std::sqrt(amp_var);
      curve.phase_mean = phase_mean;
      curve.phase_std = std::sqrt(phase_var);
      curve.offset_mean = off_mean;
      curve.offset_std = std::sqrt(off_var);
      curve.residual_rms_mean = res_mean;
      // The fitted phase tracks drift - bob_offset, so -phase estimates the
      // offset Bob applied.
      curve.bob_offset_estimate_rad = wrap_two_pi(-phase_mean);
      report.curves.push_back(curve);
      pooled_variance += phase_var;
    }

    report.pooled_phase_std = std::sqrt(pooled_variance / static_cast<double>(bob_offsets.size()));
    write_calibration_report(options.out_dir / (config.calibration_basename + ".json"),
                             options.out_dir / (config.calibration_basename + ".csv"), report);
    std::cout << "pooled phase scatter = " << report.pooled_phase_std << " rad\n";
    return kExitOk;
  });
}

}  // namespace tfqkd
