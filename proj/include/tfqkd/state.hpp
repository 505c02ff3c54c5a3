#pragma once

#include <array>
#include <map>
#include <string>
#include <string_view>

#include "tfqkd/pauli.hpp"

namespace tfqkd {

// Protocol-level preparation labels. MinusZ is the phase-randomized state;
// during scheduling it expands into four slot sub-batches with phases
// n*pi/2, n = 0..3.
enum class PrepLabel { kPlusX, kMinusX, kPlusY, kMinusY, kMinusZ };

inline constexpr std::array<PrepLabel, 5> kAllPrepLabels = {
    PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY, PrepLabel::kMinusY, PrepLabel::kMinusZ};

inline constexpr int kMinusZSlotCount = 4;

std::string_view to_string(PrepLabel label);
PrepLabel parse_prep_label(std::string_view text);  // throws ConfigError

// Nominal encoding phase of a fixed-phase label (+X -> 0, -X -> pi,
// +Y -> pi/2, -Y -> 3pi/2). Throws for MinusZ, which has slot phases instead.
double nominal_phase(PrepLabel label);

// Phase of MinusZ slot n: n*pi/2.
double minus_z_slot_phase(int slot);

// Per-session phase behaviour of Alice's source: the calibration drift sigma
// and any injected per-label offset (the correlated error under test).
struct PhasePlan {
  double phase_jitter_sigma_rad = 0.029;
  std::map<PrepLabel, double> correlated_offsets_rad;

  double offset(PrepLabel label) const;
  void validate() const;  // throws ConfigError
};

// (1, cos theta, sin theta, 0): the Bloch direction of a fixed-phase
// weak-coherent preparation.
PrepVector bloch_from_phase(double theta);

// (1, 0, 0, -1): the phase-randomized preparation. Averaging the four slot
// phases cancels the X and Y components for any constant offset.
PrepVector bloch_randomized();

// True emitted phase: nominal (or slot) phase + correlated offset +
// per-trial drift. The drift is the session phase-reference error, common to
// every preparation within a trial. For MinusZ the offset and drift apply to
// all four slot phases identically.
double apply_error_model(const PhasePlan& plan, PrepLabel label, int minus_z_slot, double trial_drift);

// Preparation vector for a label whose phase is off-nominal by `phase_error`
// radians. Reduces to the exact nominal direction when the error is zero.
PrepVector label_vector(PrepLabel label, double phase_error = 0.0);

// Assembles the 4-column preparation matrix for a label selection.
// With use_true_phases the columns carry correlated offsets and the trial
// drift; otherwise they are the nominal vectors Alice believes she prepared.
// MinusZ always maps to bloch_randomized(). Throws DegenerateSetError when
// require_invertible is set and the columns are linearly dependent.
PrepMatrix build_prep_matrix(const std::array<PrepLabel, 4>& labels, const PhasePlan& plan,
                             bool use_true_phases, double trial_drift = 0.0,
                             bool require_invertible = true,
                             double condition_bound = kDefaultConditionBound);

}  // namespace tfqkd
