#include "tfqkd/harness.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "doctest.h"
#include "tfqkd/stats.hpp"

using namespace tfqkd;

namespace {

constexpr double kPi = std::numbers::pi;

Schedule desk_schedule(long long shots = 100000) {
  Schedule schedule;
  schedule.shots_per_pair = shots;
  schedule.trials = 10;
  return schedule;
}

InterferometerModel desk_model() {
  InterferometerModel model;
  model.visibility = 0.99;
  model.mean_photons_per_pulse = 0.005;
  return model;
}

}  // namespace

TEST_CASE("schedule validation") {
  const PhasePlan plan;
  Schedule ok = desk_schedule();
  ok.validate(plan);

  Schedule too_few = ok;
  too_few.alice_labels = {PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                          PrepLabel::kMinusZ};
  CHECK_THROWS_AS(too_few.validate(plan), ConfigError);

  Schedule degenerate = ok;
  degenerate.a1_selection = {PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                             PrepLabel::kMinusY};
  CHECK_THROWS_AS(degenerate.validate(plan), DegenerateSetError);

  // Shares +X, +Y, -Z with A1 and swaps -X for -Y: exactly 3 shared, valid.
  Schedule reordered = ok;
  reordered.a2_selection = {PrepLabel::kMinusY, PrepLabel::kPlusY, PrepLabel::kMinusZ,
                            PrepLabel::kPlusX};
  reordered.validate(plan);

  Schedule same = ok;
  same.a2_selection = same.a1_selection;
  CHECK_THROWS_AS(same.validate(plan), ConfigError);

  Schedule one_trial = ok;
  one_trial.trials = 1;
  CHECK_THROWS_AS(one_trial.validate(plan), ConfigError);

  Schedule bob_randomized = ok;
  bob_randomized.bob_labels = {PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                               PrepLabel::kMinusZ};
  CHECK_THROWS_AS(bob_randomized.validate(plan), ConfigError);
}

TEST_CASE("run_trial produces expectations near the fringe model") {
  const Schedule schedule = desk_schedule(1000000);
  const PhasePlan plan;  // default drift sigma 0.029
  const InterferometerModel model = desk_model();
  const TrialResult trial = run_trial(schedule, plan, model, 0, 4242);

  // Cell (+X, +X): visibility * cos(drift), drift within a few hundredths.
  CHECK(std::abs(trial.s_table[0][0] - 0.99) < 0.01);

  // The randomized row averages to zero within a few Poisson sigma.
  const int mz = schedule.alice_index(PrepLabel::kMinusZ);
  for (std::size_t j = 0; j < 4; ++j) {
    const CountRecord& counts = trial.counts[static_cast<std::size_t>(mz)][j];
    const double sigma = 1.0 / std::sqrt(static_cast<double>(counts.n_plus + counts.n_minus));
    CHECK(std::abs(trial.s_table[static_cast<std::size_t>(mz)][j]) < 5.0 * sigma);
  }
}

TEST_CASE("run_trial reflects an injected offset on -X") {
  const Schedule schedule = desk_schedule(1000000);
  PhasePlan plan;
  plan.phase_jitter_sigma_rad = 0.0;
  plan.correlated_offsets_rad[PrepLabel::kMinusX] = kPi / 30.0;
  const InterferometerModel model = desk_model();
  const TrialResult trial = run_trial(schedule, plan, model, 0, 7);

  const double expected = 0.99 * std::cos(kPi + kPi / 30.0);
  CHECK(std::abs(trial.s_table[1][0] - expected) < 0.01);
}

TEST_CASE("run_experiment is reproducible and rejects single trials") {
  const Schedule schedule = desk_schedule(2000);
  const PhasePlan plan;
  const InterferometerModel model = desk_model();

  std::vector<Message> transcript_a;
  std::vector<Message> transcript_b;
  const auto results_a = run_experiment(schedule, plan, model, 99, 1, &transcript_a);
  const auto results_b = run_experiment(schedule, plan, model, 99, 1, &transcript_b);
  REQUIRE(results_a.size() == results_b.size());
  for (std::size_t t = 0; t < results_a.size(); ++t) {
    CHECK(results_a[t].s_table == results_b[t].s_table);
  }
  CHECK(transcript_a.size() == transcript_b.size());

  Schedule bad = schedule;
  bad.trials = 1;
  CHECK_THROWS_AS(run_experiment(bad, plan, model, 99), ConfigError);
}

TEST_CASE("parallel execution matches serial execution exactly") {
  const Schedule schedule = desk_schedule(2000);
  const PhasePlan plan;
  const InterferometerModel model = desk_model();

  std::vector<Message> serial_transcript;
  std::vector<Message> parallel_transcript;
  const auto serial = run_experiment(schedule, plan, model, 1234, 1, &serial_transcript);
  const auto parallel = run_experiment(schedule, plan, model, 1234, 4, &parallel_transcript);
  REQUIRE(serial.size() == parallel.size());
  for (std::size_t t = 0; t < serial.size(); ++t) {
    CHECK(serial[t].s_table == parallel[t].s_table);
    CHECK(serial[t].counts == parallel[t].counts);
  }
  REQUIRE(serial_transcript.size() == parallel_transcript.size());
  for (std::size_t i = 0; i < serial_transcript.size(); ++i) {
    CHECK(serial_transcript[i].index() == parallel_transcript[i].index());
  }
}

TEST_CASE("different seeds yield uncorrelated count noise") {
  Schedule schedule = desk_schedule(2000);
  schedule.trials = 2;
  PhasePlan plan;
  plan.phase_jitter_sigma_rad = 0.0;  // isolate the Poisson noise
  const InterferometerModel model = desk_model();

  // Pairing the same cell across two seeds: after subtracting the shared
  // deterministic fringe value, the residuals must be uncorrelated.
  double sum_a = 0.0;
  double sum_b = 0.0;
  double sum_ab = 0.0;
  double sum_a2 = 0.0;
  double sum_b2 = 0.0;
  int n = 0;
  for (int pair = 0; pair < 50; ++pair) {
    const auto res_a = run_experiment(schedule, plan, model, static_cast<std::uint64_t>(pair), 1);
    const auto res_b =
        run_experiment(schedule, plan, model, static_cast<std::uint64_t>(pair) + 5000, 1);
    for (std::size_t t = 0; t < res_a.size(); ++t) {
      for (std::size_t i = 0; i < res_a[t].s_table.size(); ++i) {
        for (std::size_t j = 0; j < res_a[t].s_table[i].size(); ++j) {
          const double truth = predict_cell_expectation(
              schedule.alice_labels[i], schedule.bob_labels[j], plan, model);
          const double a = res_a[t].s_table[i][j] - truth;
          const double b = res_b[t].s_table[i][j] - truth;
          sum_a += a;
          sum_b += b;
          sum_ab += a * b;
          sum_a2 += a * a;
          sum_b2 += b * b;
          ++n;
        }
      }
    }
  }
  const double nd = static_cast<double>(n);
  const double cov = sum_ab / nd - (sum_a / nd) * (sum_b / nd);
  const double var_a = sum_a2 / nd - (sum_a / nd) * (sum_a / nd);
  const double var_b = sum_b2 / nd - (sum_b / nd) * (sum_b / nd);
  const double corr = cov / std::sqrt(var_a * var_b);
  // n = 3200 paired residuals; |corr| of independent noise ~ 1/sqrt(n).
  CHECK(std::abs(corr) < 0.1);
}

TEST_CASE("message causality is enforced") {
  AliceLedger ledger(5);

  CHECK_THROWS_AS(ledger.on_message(LabelReveal{7, Party::kBob, PrepLabel::kPlusX}),
                  ProtocolViolationError);

  ledger.on_message(ShotBatchAnnounce{7, 0, 100});
  CHECK_THROWS_AS(ledger.on_message(DetectionRecord{7, {1, 2, 100}}), ProtocolViolationError);

  ledger.on_message(PrepCommit{7, Party::kAlice, "A0"});
  ledger.note_own_preparation(7, 0);
  ledger.on_message(PrepCommit{7, Party::kBob, "B0"});
  CHECK_THROWS_AS(ledger.on_message(LabelReveal{7, Party::kBob, PrepLabel::kPlusX}),
                  ProtocolViolationError);

  ledger.on_message(DetectionRecord{7, {3, 4, 100}});
  ledger.on_message(LabelReveal{7, Party::kBob, PrepLabel::kPlusX});

  CHECK_THROWS_AS(ledger.on_message(ShotBatchAnnounce{7, 0, 100}), ProtocolViolationError);
}

TEST_CASE("assemble_expectations selects rows and orders columns by reveals") {
  Schedule schedule = desk_schedule(4000);
  schedule.trials = 2;
  const PhasePlan plan;
  const InterferometerModel model = desk_model();
  const auto results = run_experiment(schedule, plan, model, 31, 1);
  const TrialEnsemble ensemble = assemble_expectations(results, schedule);

  REQUIRE(ensemble.trials() == 2);
  for (std::size_t t = 0; t < 2; ++t) {
    const TrialResult& trial = results[t];
    // Rows of S1 follow {+X, -X, +Y, -Z} = alice rows {0, 1, 2, 4}.
    CHECK(ensemble.s1[t](0, 0) == trial.s_table[0][0]);
    CHECK(ensemble.s1[t](2, 3) == trial.s_table[2][3]);
    CHECK(ensemble.s1[t](3, 1) == trial.s_table[4][1]);
    // Rows of S2 follow {+X, -X, -Y, -Z} = alice rows {0, 1, 3, 4}.
    CHECK(ensemble.s2[t](2, 2) == trial.s_table[3][2]);
  }
}

TEST_CASE("shared rows are bit-identical in S1 and S2") {
  Schedule schedule = desk_schedule(3000);
  schedule.trials = 3;
  const PhasePlan plan;
  const InterferometerModel model = desk_model();
  const auto results = run_experiment(schedule, plan, model, 77, 1);
  const TrialEnsemble ensemble = assemble_expectations(results, schedule);

  for (std::size_t t = 0; t < static_cast<std::size_t>(ensemble.trials()); ++t) {
    for (int j = 0; j < 4; ++j) {
      // +X, -X and -Z rows are shared between the selections.
      CHECK(ensemble.s1[t](0, j) == ensemble.s2[t](0, j));
      CHECK(ensemble.s1[t](1, j) == ensemble.s2[t](1, j));
      CHECK(ensemble.s1[t](3, j) == ensemble.s2[t](3, j));
    }
  }
}

TEST_CASE("permuting bob labels permutes M columns without changing the verdict") {
  Schedule schedule = desk_schedule(50000);
  schedule.trials = 10;
  PhasePlan plan;
  plan.correlated_offsets_rad[PrepLabel::kMinusX] = kPi / 30.0;
  const InterferometerModel model = desk_model();
  const auto results = run_experiment(schedule, plan, model, 5150, 1);

  Schedule permuted = schedule;
  permuted.bob_labels = {PrepLabel::kMinusY, PrepLabel::kPlusX, PrepLabel::kMinusX,
                         PrepLabel::kPlusY};
  // Column j of the permuted assembly is column perm[j] of the original.
  const int perm[4] = {3, 0, 1, 2};

  const TrialEnsemble base = assemble_expectations(results, schedule);
  const TrialEnsemble shuffled = assemble_expectations(results, permuted);
  for (std::size_t t = 0; t < static_cast<std::size_t>(base.trials()); ++t) {
    for (int r = 0; r < 4; ++r) {
      for (int j = 0; j < 4; ++j) {
        CHECK(shuffled.s1[t](r, j) == base.s1[t](r, perm[j]));
      }
    }
  }

  RngStream rng_a(StreamKey(1));
  RngStream rng_b(StreamKey(1));
  const EnsembleStats stats_a = ensemble_m(base, schedule.a1_selection, schedule.a2_selection,
                                           plan.phase_jitter_sigma_rad, 50, rng_a);
  const EnsembleStats stats_b = ensemble_m(shuffled, permuted.a1_selection, permuted.a2_selection,
                                           plan.phase_jitter_sigma_rad, 50, rng_b);
  const DetectionReport report_a = detection_report(stats_a.m, stats_a.sigma, base.trials(), 0.05);
  const DetectionReport report_b =
      detection_report(stats_b.m, stats_b.sigma, shuffled.trials(), 0.05);
  CHECK(report_a.verdict == report_b.verdict);
  for (int r = 0; r < 4; ++r) {
    for (int j = 0; j < 4; ++j) {
      CHECK(stats_b.m(r, j) == doctest::Approx(stats_a.m(r, perm[j])).epsilon(1e-12));
    }
  }
}

TEST_CASE("missing reveal raises MissingLabel") {
  Schedule schedule = desk_schedule(3000);
  schedule.trials = 2;
  const PhasePlan plan;
  const InterferometerModel model = desk_model();
  auto results = run_experiment(schedule, plan, model, 8, 1);

  // Drop one reveal record as if Bob had never disclosed that label.
  results[0].bob_reveals.erase("B2");
  CHECK_THROWS_AS(assemble_expectations(results, schedule), MissingLabelError);
}

TEST_CASE("flagged cells raise NoCounts during assembly") {
  Schedule schedule = desk_schedule(3000);
  schedule.trials = 2;
  const PhasePlan plan;
  const InterferometerModel model = desk_model();
  auto results = run_experiment(schedule, plan, model, 9, 1);
  results[1].s_table[2][1] = std::numeric_limits<double>::quiet_NaN();
  results[1].no_count_cells.emplace_back(2, 1);
  CHECK_THROWS_AS(assemble_expectations(results, schedule), NoCountsError);
}

TEST_CASE("trial transcripts follow announce-commit-detect-reveal order") {
  Schedule schedule = desk_schedule(2000);
  schedule.trials = 2;
  const PhasePlan plan;
  const InterferometerModel model = desk_model();
  std::vector<Message> transcript;
  run_experiment(schedule, plan, model, 55, 1, &transcript);

  REQUIRE(transcript.size() % 5 == 0);
  REQUIRE(transcript.size() ==
          static_cast<std::size_t>(2 * schedule.batches_per_trial()) * 5);
  for (std::size_t i = 0; i < transcript.size(); i += 5) {
    CHECK(std::holds_alternative<ShotBatchAnnounce>(transcript[i]));
    CHECK(std::holds_alternative<PrepCommit>(transcript[i + 1]));
    CHECK(std::holds_alternative<PrepCommit>(transcript[i + 2]));
    CHECK(std::holds_alternative<DetectionRecord>(transcript[i + 3]));
    CHECK(std::holds_alternative<LabelReveal>(transcript[i + 4]));
    const auto& announce = std::get<ShotBatchAnnounce>(transcript[i]);
    const auto& detection = std::get<DetectionRecord>(transcript[i + 3]);
    CHECK(detection.batch_id == announce.batch_id);
  }
}
