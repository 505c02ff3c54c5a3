#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "tfqkd/measurement.hpp"
#include "tfqkd/pauli.hpp"
#include "tfqkd/state.hpp"

namespace tfqkd {

enum class Party { kAlice, kBob, kCharlie };

std::string_view to_string(Party party);

// Wire messages. The analysis path sees only these: label tokens, label
// reveals, and detector counts. Phase values never cross the channel.
struct ShotBatchAnnounce {
  std::int64_t batch_id = 0;
  int trial = 0;
  long long shots = 0;
};

struct PrepCommit {
  std::int64_t batch_id = 0;
  Party party = Party::kAlice;
  std::string token;
};

struct DetectionRecord {
  std::int64_t batch_id = 0;
  CountRecord counts;
};

struct LabelReveal {
  std::int64_t batch_id = 0;
  Party party = Party::kBob;
  PrepLabel label = PrepLabel::kPlusX;
};

using Message = std::variant<ShotBatchAnnounce, PrepCommit, DetectionRecord, LabelReveal>;

// Experiment schedule: which states each side prepares, how Alice splits her
// preparations into the two analysis selections, and the data volume.
struct Schedule {
  std::vector<PrepLabel> alice_labels{PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                                      PrepLabel::kMinusY, PrepLabel::kMinusZ};
  std::vector<PrepLabel> bob_labels{PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                                    PrepLabel::kMinusY};
  std::array<PrepLabel, 4> a1_selection{PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                                        PrepLabel::kMinusZ};
  std::array<PrepLabel, 4> a2_selection{PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kMinusY,
                                        PrepLabel::kMinusZ};
  long long shots_per_pair = 1'000'000;
  int trials = 10;

  // Throws ConfigError / DegenerateSetError on invariant violations.
  void validate(const PhasePlan& plan, double condition_bound = kDefaultConditionBound) const;

  int alice_index(PrepLabel label) const;  // -1 when absent
  std::int64_t batches_per_trial() const;
};

// Everything Alice holds after one trial. Rows follow schedule.alice_labels;
// columns follow Bob's commit-token order, resolvable to labels only through
// bob_reveals.
struct TrialResult {
  int trial_index = 0;
  std::vector<std::vector<double>> s_table;
  std::vector<std::vector<CountRecord>> counts;
  std::vector<std::string> bob_tokens;
  std::map<std::string, PrepLabel> bob_reveals;
  std::vector<std::pair<int, int>> no_count_cells;
};

// Alice's record keeper. Consumes the message stream in order, enforces
// causality (commit after announce, detection after commits, reveal after
// detection), and accumulates counts per (own label, Bob token) cell.
// It never sees phases or the measurement model.
class AliceLedger {
 public:
  explicit AliceLedger(int alice_rows);

  void on_message(const Message& message);

  // Alice's own preparation bookkeeping, recorded when she commits.
  void note_own_preparation(std::int64_t batch_id, int alice_row);

  TrialResult finalize(int trial_index) const;

 private:
  struct BatchState {
    long long announced_shots = -1;
    bool alice_committed = false;
    bool bob_committed = false;
    bool detected = false;
    bool revealed = false;
    int alice_row = -1;
    std::string bob_token;
    CountRecord counts;
  };

  BatchState& require_batch(std::int64_t batch_id, const char* context);

  int alice_rows_;
  std::map<std::int64_t, BatchState> batches_;
  std::vector<std::string> bob_tokens_;
  std::map<std::string, PrepLabel> bob_reveals_;
};

// Runs one trial: samples the session drift, steps every (Alice label, Bob
// label) pair (MinusZ expanded into four equal slot sub-batches whose counts
// are summed), and plays the announce -> commits -> detection -> reveal
// message sequence through Alice's ledger. Appends messages to *transcript
// when given.
TrialResult run_trial(const Schedule& schedule, const PhasePlan& plan, const InterferometerModel& model,
                      int trial, std::uint64_t seed, std::vector<Message>* transcript = nullptr);

// Runs `schedule.trials` independent trials on disjoint, counter-derived
// streams. Results and transcript are identical for any thread count.
std::vector<TrialResult> run_experiment(const Schedule& schedule, const PhasePlan& plan,
                                        const InterferometerModel& model, std::uint64_t seed,
                                        int threads = 1, std::vector<Message>* transcript = nullptr);

// Per-trial S1/S2 expectation matrices.
struct TrialEnsemble {
  std::vector<Mat4> s1;
  std::vector<Mat4> s2;

  int trials() const { return static_cast<int>(s1.size()); }
};

// Selects S1/S2 rows per the schedule's selections and orders columns by
// Bob's revealed labels. Rows shared by both selections reuse the same
// measured values. Throws MissingLabelError when a Bob label was never
// revealed and NoCountsError when a selected cell is flagged.
TrialEnsemble assemble_expectations(const std::vector<TrialResult>& results, const Schedule& schedule);

}  // namespace tfqkd
