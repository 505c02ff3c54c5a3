#include "tfqkd/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <set>
#include <thread>

namespace tfqkd {

std::string_view to_string(Party party) {
  switch (party) {
    case Party::kAlice:
      return "alice";
    case Party::kBob:
      return "bob";
    case Party::kCharlie:
      return "charlie";
  }
  return "?";
}

void Schedule::validate(const PhasePlan& plan, double condition_bound) const {
  if (alice_labels.size() < 5 || alice_labels.size() > 8) {
    throw ConfigError("alice_labels must contain between 5 and 8 preparations");
  }
  if (std::set<PrepLabel>(alice_labels.begin(), alice_labels.end()).size() != alice_labels.size()) {
    throw ConfigError("alice_labels must be distinct");
  }
  if (bob_labels.size() != 4 ||
      std::set<PrepLabel>(bob_labels.begin(), bob_labels.end()).size() != 4) {
    throw ConfigError("bob_labels must be 4 distinct preparations");
  }
  for (PrepLabel label : bob_labels) {
    if (label == PrepLabel::kMinusZ) {
      throw ConfigError("bob_labels must be fixed-phase preparations; -Z carries no phase reference");
    }
  }
  for (const auto& selection : {a1_selection, a2_selection}) {
    if (std::set<PrepLabel>(selection.begin(), selection.end()).size() != 4) {
      throw ConfigError("selection labels must be distinct");
    }
    for (PrepLabel label : selection) {
      if (alice_index(label) < 0) {
        throw ConfigError("selection label " + std::string(to_string(label)) +
                          " is not among alice_labels");
      }
    }
  }
  int shared = 0;
  for (PrepLabel label : a1_selection) {
    if (std::find(a2_selection.begin(), a2_selection.end(), label) != a2_selection.end()) {
      ++shared;
    }
  }
  if (shared < 3 || shared > 3) {
    throw ConfigError("a1_selection and a2_selection must share exactly 3 labels and differ in one");
  }
  if (shots_per_pair < 4) {
    throw ConfigError("shots_per_pair must be >= 4 (the randomized state splits into 4 slots)");
  }
  if (trials < 2) {
    throw ConfigError("trials must be >= 2");
  }
  // Both selections must be invertible with nominal preparations.
  build_prep_matrix(a1_selection, plan, false, 0.0, true, condition_bound);
  build_prep_matrix(a2_selection, plan, false, 0.0, true, condition_bound);
}

int Schedule::alice_index(PrepLabel label) const {
  for (std::size_t i = 0; i < alice_labels.size(); ++i) {
    if (alice_labels[i] == label) {
      return static_cast<int>(i);
    }
  }
  return -1;
}

std::int64_t Schedule::batches_per_trial() const {
  std::int64_t batches = 0;
  for (PrepLabel label : alice_labels) {
    batches += label == PrepLabel::kMinusZ ? kMinusZSlotCount : 1;
  }
  return batches * static_cast<std::int64_t>(bob_labels.size());
}

AliceLedger::AliceLedger(int alice_rows) : alice_rows_(alice_rows) {}

AliceLedger::BatchState& AliceLedger::require_batch(std::int64_t batch_id, const char* context) {
  auto it = batches_.find(batch_id);
  if (it == batches_.end()) {
    throw ProtocolViolationError(std::string(context) + " for unannounced batch " +
                                 std::to_string(batch_id));
  }
  return it->second;
}

void AliceLedger::note_own_preparation(std::int64_t batch_id, int alice_row) {
  BatchState& batch = require_batch(batch_id, "own preparation record");
  if (alice_row < 0 || alice_row >= alice_rows_) {
    throw ProtocolViolationError("alice row out of range");
  }
  batch.alice_row = alice_row;
}

void AliceLedger::on_message(const Message& message) {
  if (const auto* announce = std::get_if<ShotBatchAnnounce>(&message)) {
    if (batches_.count(announce->batch_id) != 0) {
      throw ProtocolViolationError("batch " + std::to_string(announce->batch_id) +
                                   " announced twice");
    }
    BatchState state;
    state.announced_shots = announce->shots;
    batches_.emplace(announce->batch_id, state);
    return;
  }
  if (const auto* commit = std::get_if<PrepCommit>(&message)) {
    BatchState& batch = require_batch(commit->batch_id, "preparation commit");
    if (batch.detected) {
      throw ProtocolViolationError("commit after detection for batch " +
                                   std::to_string(commit->batch_id));
    }
    if (commit->party == Party::kAlice) {
      batch.alice_committed = true;
    } else if (commit->party == Party::kBob) {
      batch.bob_committed = true;
      batch.bob_token = commit->token;
      if (std::find(bob_tokens_.begin(), bob_tokens_.end(), commit->token) == bob_tokens_.end()) {
        bob_tokens_.push_back(commit->token);
      }
    } else {
      throw ProtocolViolationError("charlie does not commit preparations");
    }
    return;
  }
  if (const auto* detection = std::get_if<DetectionRecord>(&message)) {
    BatchState& batch = require_batch(detection->batch_id, "detection record");
    if (!batch.alice_committed || !batch.bob_committed) {
      throw ProtocolViolationError("detection before both commits for batch " +
                                   std::to_string(detection->batch_id));
    }
    if (batch.detected) {
      throw ProtocolViolationError("duplicate detection for batch " +
                                   std::to_string(detection->batch_id));
    }
    batch.detected = true;
    batch.counts = detection->counts;
    return;
  }
  const auto& reveal = std::get<LabelReveal>(message);
  BatchState& batch = require_batch(reveal.batch_id, "label reveal");
  if (!batch.detected) {
    throw ProtocolViolationError("label reveal before detection for batch " +
                                 std::to_string(reveal.batch_id));
  }
  if (reveal.party != Party::kBob) {
    throw ProtocolViolationError("only bob reveals labels");
  }
  batch.revealed = true;
  auto it = bob_reveals_.find(batch.bob_token);
  if (it != bob_reveals_.end() && it->second != reveal.label) {
    throw ProtocolViolationError("token '" + batch.bob_token + "' revealed as two different labels");
  }
  bob_reveals_[batch.bob_token] = reveal.label;
}

TrialResult AliceLedger::finalize(int trial_index) const {
  TrialResult result;
  result.trial_index = trial_index;
  result.bob_tokens = bob_tokens_;
  result.bob_reveals = bob_reveals_;

  const std::size_t cols = bob_tokens_.size();
  result.s_table.assign(static_cast<std::size_t>(alice_rows_),
                        std::vector<double>(cols, std::numeric_limits<double>::quiet_NaN()));
  result.counts.assign(static_cast<std::size_t>(alice_rows_), std::vector<CountRecord>(cols));

  std::map<std::string, std::size_t> column_of;
  for (std::size_t j = 0; j < cols; ++j) {
    column_of[bob_tokens_[j]] = j;
  }

  for (const auto& [batch_id, batch] : batches_) {
    if (!batch.detected || !batch.revealed) {
      throw ProtocolViolationError("batch " + std::to_string(batch_id) +
                                   " never completed the message sequence");
    }
    if (batch.alice_row < 0) {
      throw ProtocolViolationError("batch " + std::to_string(batch_id) +
                                   " has no alice preparation record");
    }
    CountRecord& cell = result.counts[static_cast<std::size_t>(batch.alice_row)]
                                     [column_of.at(batch.bob_token)];
    cell.n_plus += batch.counts.n_plus;
    cell.n_minus += batch.counts.n_minus;
    cell.shots += batch.counts.shots;
  }

  for (std::size_t i = 0; i < result.counts.size(); ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      try {
        result.s_table[i][j] = estimate_expectation(result.counts[i][j]);
      } catch (const NoCountsError&) {
        result.no_count_cells.emplace_back(static_cast<int>(i), static_cast<int>(j));
      }
    }
  }
  return result;
}

namespace {

long long slot_shots(long long shots_per_pair, int slots, int slot) {
  const long long base = shots_per_pair / slots;
  const long long remainder = shots_per_pair % slots;
  return base + (slot < remainder ? 1 : 0);
}

}  // namespace

TrialResult run_trial(const Schedule& schedule, const PhasePlan& plan, const InterferometerModel& model,
                      int trial, std::uint64_t seed, std::vector<Message>* transcript) {
  const auto trial_u = static_cast<std::uint64_t>(trial);
  RngStream drift_stream(purpose_key(seed, StreamPurpose::kTrialDrift).with(trial_u));
  const double drift = drift_stream.gaussian(plan.phase_jitter_sigma_rad);

  AliceLedger ledger(static_cast<int>(schedule.alice_labels.size()));
  auto deliver = [&](const Message& message) {
    ledger.on_message(message);
    if (transcript != nullptr) {
      transcript->push_back(message);
    }
  };

  std::int64_t batch_id = static_cast<std::int64_t>(trial) * schedule.batches_per_trial();
  for (std::size_t ai = 0; ai < schedule.alice_labels.size(); ++ai) {
    const PrepLabel alice_label = schedule.alice_labels[ai];
    const int slots = alice_label == PrepLabel::kMinusZ ? kMinusZSlotCount : 1;
    for (std::size_t bi = 0; bi < schedule.bob_labels.size(); ++bi) {
      const PrepLabel bob_label = schedule.bob_labels[bi];
      for (int slot = 0; slot < slots; ++slot) {
        const long long shots = slot_shots(schedule.shots_per_pair, slots, slot);
        deliver(ShotBatchAnnounce{batch_id, trial, shots});
        deliver(PrepCommit{batch_id, Party::kAlice, "A" + std::to_string(ai)});
        ledger.note_own_preparation(batch_id, static_cast<int>(ai));
        deliver(PrepCommit{batch_id, Party::kBob, "B" + std::to_string(bi)});

        // Physical layer: true phases reach Charlie's measurement only.
        const double theta_a = apply_error_model(plan, alice_label, slot, drift);
        const double theta_b = nominal_phase(bob_label);
        RngStream count_stream(purpose_key(seed, StreamPurpose::kCounts)
                                   .with(trial_u)
                                   .with(ai)
                                   .with(bi)
                                   .with(static_cast<std::uint64_t>(slot)));
        const CountRecord counts =
            simulate_counts(theta_a, theta_b, model, alice_label, shots, count_stream);

        deliver(DetectionRecord{batch_id, counts});
        deliver(LabelReveal{batch_id, Party::kBob, bob_label});
        ++batch_id;
      }
    }
  }
  return ledger.finalize(trial);
}

std::vector<TrialResult> run_experiment(const Schedule& schedule, const PhasePlan& plan,
                                        const InterferometerModel& model, std::uint64_t seed,
                                        int threads, std::vector<Message>* transcript) {
  if (schedule.trials < 2) {
    throw ConfigError("run_experiment: trials must be >= 2");
  }
  const int n = schedule.trials;
  std::vector<TrialResult> results(static_cast<std::size_t>(n));
  std::vector<std::vector<Message>> transcripts(static_cast<std::size_t>(n));

  if (threads <= 1) {
    for (int t = 0; t < n; ++t) {
      results[static_cast<std::size_t>(t)] =
          run_trial(schedule, plan, model, t, seed,
                    transcript != nullptr ? &transcripts[static_cast<std::size_t>(t)] : nullptr);
    }
  } else {
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::atomic<int> next{0};
    auto worker = [&] {
      for (;;) {
        const int t = next.fetch_add(1);
        if (t >= n) {
          return;
        }
        try {
          results[static_cast<std::size_t>(t)] =
              run_trial(schedule, plan, model, t, seed,
                        transcript != nullptr ? &transcripts[static_cast<std::size_t>(t)] : nullptr);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) {
            failure = std::current_exception();
          }
        }
      }
    };
    std::vector<std::thread> pool;
    const int pool_size = std::min(threads, n);
    pool.reserve(static_cast<std::size_t>(pool_size));
    for (int i = 0; i < pool_size; ++i) {
      pool.emplace_back(worker);
    }
    for (std::thread& t : pool) {
      t.join();
    }
    if (failure) {
      std::rethrow_exception(failure);
    }
  }

  if (transcript != nullptr) {
    for (auto& part : transcripts) {
      transcript->insert(transcript->end(), part.begin(), part.end());
    }
  }
  return results;
}

TrialEnsemble assemble_expectations(const std::vector<TrialResult>& results, const Schedule& schedule) {
  TrialEnsemble ensemble;
  ensemble.s1.reserve(results.size());
  ensemble.s2.reserve(results.size());

  for (const TrialResult& trial : results) {
    // Resolve Bob's column order from his revealed labels.
    std::array<std::size_t, 4> column{};
    for (std::size_t j = 0; j < schedule.bob_labels.size(); ++j) {
      const PrepLabel wanted = schedule.bob_labels[j];
      bool found = false;
      for (std::size_t k = 0; k < trial.bob_tokens.size(); ++k) {
        auto it = trial.bob_reveals.find(trial.bob_tokens[k]);
        if (it != trial.bob_reveals.end() && it->second == wanted) {
          column[j] = k;
          found = true;
          break;
        }
      }
      if (!found) {
        throw MissingLabelError("bob label " + std::string(to_string(wanted)) +
                                " was never revealed in trial " + std::to_string(trial.trial_index));
      }
    }

    auto fill = [&](const std::array<PrepLabel, 4>& selection) {
      Mat4 s;
      for (std::size_t r = 0; r < 4; ++r) {
        const int row = schedule.alice_index(selection[r]);
        if (row < 0) {
          throw MissingLabelError("selection label " + std::string(to_string(selection[r])) +
                                  " missing from alice_labels");
        }
        for (std::size_t j = 0; j < 4; ++j) {
          const double value = trial.s_table[static_cast<std::size_t>(row)][column[j]];
          if (std::isnan(value)) {
            throw NoCountsError("cell (" + std::string(to_string(selection[r])) + ", " +
                                std::string(to_string(schedule.bob_labels[j])) + ") of trial " +
                                std::to_string(trial.trial_index) + " has no counts");
          }
          s(static_cast<int>(r), static_cast<int>(j)) = value;
        }
      }
      return s;
    };

    ensemble.s1.push_back(fill(schedule.a1_selection));
    ensemble.s2.push_back(fill(schedule.a2_selection));
  }
  return ensemble;
}

}  // namespace tfqkd
