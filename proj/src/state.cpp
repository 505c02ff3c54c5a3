#include "tfqkd/state.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

namespace tfqkd {

namespace {

constexpr double kPi = std::numbers::pi;

struct UnitPhase {
  double c;
  double s;
};

// Exact unit-circle coordinates of the nominal phases. Using literals instead
// of cos/sin keeps the nominal preparation matrices free of trig roundoff,
// which keeps shared-row cancellations in the M-matrix exact.
UnitPhase nominal_trig(PrepLabel label) {
  switch (label) {
    case PrepLabel::kPlusX:
      return {1.0, 0.0};
    case PrepLabel::kMinusX:
      return {-1.0, 0.0};
    case PrepLabel::kPlusY:
      return {0.0, 1.0};
    case PrepLabel::kMinusY:
      return {0.0, -1.0};
    case PrepLabel::kMinusZ:
      break;
  }
  throw Error("nominal_trig: MinusZ has no single nominal phase");
}

}  // namespace

std::string_view to_string(PrepLabel label) {
  switch (label) {
    case PrepLabel::kPlusX:
      return "+X";
    case PrepLabel::kMinusX:
      return "-X";
    case PrepLabel::kPlusY:
      return "+Y";
    case PrepLabel::kMinusY:
      return "-Y";
    case PrepLabel::kMinusZ:
      return "-Z";
  }
  return "?";
}

PrepLabel parse_prep_label(std::string_view text) {
  for (PrepLabel label : kAllPrepLabels) {
    if (text == to_string(label)) {
      return label;
    }
  }
  throw ConfigError("unknown preparation label '" + std::string(text) +
                    "' (expected one of +X, -X, +Y, -Y, -Z)");
}

double nominal_phase(PrepLabel label) {
  switch (label) {
    case PrepLabel::kPlusX:
      return 0.0;
    case PrepLabel::kMinusX:
      return kPi;
    case PrepLabel::kPlusY:
      return kPi / 2.0;
    case PrepLabel::kMinusY:
      return 3.0 * kPi / 2.0;
    case PrepLabel::kMinusZ:
      break;
  }
  throw Error("nominal_phase: MinusZ has no single nominal phase; use minus_z_slot_phase");
}

double minus_z_slot_phase(int slot) {
  if (slot < 0 || slot >= kMinusZSlotCount) {
    throw Error("minus_z_slot_phase: slot must be in [0, 4)");
  }
  return static_cast<double>(slot) * kPi / 2.0;
}

double PhasePlan::offset(PrepLabel label) const {
  auto it = correlated_offsets_rad.find(label);
  return it == correlated_offsets_rad.end() ? 0.0 : it->second;
}

void PhasePlan::validate() const {
  if (!(phase_jitter_sigma_rad >= 0.0) || !std::isfinite(phase_jitter_sigma_rad)) {
    throw ConfigError("phase_jitter_sigma_rad must be finite and >= 0");
  }
  for (const auto& [label, offset] : correlated_offsets_rad) {
    if (!std::isfinite(offset)) {
      throw ConfigError("correlated offset for " + std::string(to_string(label)) + " must be finite");
    }
  }
}

PrepVector bloch_from_phase(double theta) {
  return {1.0, std::cos(theta), std::sin(theta), 0.0};
}

PrepVector bloch_randomized() {
  return {1.0, 0.0, 0.0, -1.0};
}

double apply_error_model(const PhasePlan& plan, PrepLabel label, int minus_z_slot, double trial_drift) {
  const double base =
      label == PrepLabel::kMinusZ ? minus_z_slot_phase(minus_z_slot) : nominal_phase(label);
  return base + plan.offset(label) + trial_drift;
}

PrepVector label_vector(PrepLabel label, double phase_error) {
  if (label == PrepLabel::kMinusZ) {
    return bloch_randomized();
  }
  const UnitPhase n = nominal_trig(label);
  const double ce = std::cos(phase_error);
  const double se = std::sin(phase_error);
  return {1.0, n.c * ce - n.s * se, n.s * ce + n.c * se, 0.0};
}

PrepMatrix build_prep_matrix(const std::array<PrepLabel, 4>& labels, const PhasePlan& plan,
                             bool use_true_phases, double trial_drift, bool require_invertible,
                             double condition_bound) {
  PrepMatrix a;
  for (int c = 0; c < 4; ++c) {
    const PrepLabel label = labels[static_cast<std::size_t>(c)];
    const double err = use_true_phases ? plan.offset(label) + trial_drift : 0.0;
    a.set_column(c, label_vector(label, err));
  }
  if (require_invertible) {
    try {
      invert_transpose(a, condition_bound);
    } catch (const SingularMatrixError&) {
      std::ostringstream msg;
      msg << "degenerate preparation set {";
      for (int c = 0; c < 4; ++c) {
        msg << (c == 0 ? "" : ", ") << to_string(labels[static_cast<std::size_t>(c)]);
      }
      msg << "}: columns are linearly dependent";
      throw DegenerateSetError(msg.str());
    }
  }
  return a;
}

}  // namespace tfqkd
