#include "tfqkd/state.hpp"

#include <cmath>
#include <numbers>

#include "doctest.h"
#include "oracles.hpp"
#include "tfqkd/rng.hpp"

using namespace tfqkd;

namespace {

constexpr double kPi = std::numbers::pi;

}  // namespace

TEST_CASE("bloch_from_phase at cardinal phases") {
  const PrepVector plus_x = bloch_from_phase(0.0);
  CHECK(plus_x[kPauliI] == 1.0);
  CHECK(plus_x[kPauliX] == doctest::Approx(1.0));
  CHECK(plus_x[kPauliY] == doctest::Approx(0.0));
  CHECK(plus_x[kPauliZ] == 0.0);

  const PrepVector minus_x = bloch_from_phase(kPi);
  CHECK(minus_x[kPauliX] == doctest::Approx(-1.0));
  CHECK(std::abs(minus_x[kPauliY]) < 1e-15);

  const PrepVector plus_y = bloch_from_phase(kPi / 2.0);
  CHECK(std::abs(plus_y[kPauliX]) < 1e-15);
  CHECK(plus_y[kPauliY] == doctest::Approx(1.0));
}

TEST_CASE("bloch_from_phase is 2*pi periodic and antipodal under pi shifts") {
  RngStream rng(StreamKey(200));
  for (int i = 0; i < 50; ++i) {
    const double theta = 4.0 * kPi * (rng.uniform() - 0.5);
    const PrepVector v = bloch_from_phase(theta);
    const PrepVector w = bloch_from_phase(theta + 2.0 * kPi);
    CHECK(std::abs(v[kPauliX] - w[kPauliX]) < 1e-12);
    CHECK(std::abs(v[kPauliY] - w[kPauliY]) < 1e-12);

    const PrepVector anti = bloch_from_phase(theta + kPi);
    CHECK(std::abs(v[kPauliX] + anti[kPauliX]) < 1e-12);
    CHECK(std::abs(v[kPauliY] + anti[kPauliY]) < 1e-12);
  }
}

TEST_CASE("bloch_randomized is the -Z vector and slot phases average out") {
  const PrepVector v = bloch_randomized();
  CHECK(v == PrepVector{1.0, 0.0, 0.0, -1.0});

  // Slot-averaged X and Y components vanish for any constant offset.
  RngStream rng(StreamKey(201));
  for (int i = 0; i < 10; ++i) {
    const double delta = 4.0 * kPi * (rng.uniform() - 0.5);
    double x_sum = 0.0;
    double y_sum = 0.0;
    for (int slot = 0; slot < kMinusZSlotCount; ++slot) {
      const PrepVector slot_vec = bloch_from_phase(minus_z_slot_phase(slot) + delta);
      x_sum += slot_vec[kPauliX];
      y_sum += slot_vec[kPauliY];
    }
    CHECK(std::abs(x_sum) / 4.0 < 1e-12);
    CHECK(std::abs(y_sum) / 4.0 < 1e-12);
  }
}

TEST_CASE("apply_error_model composes nominal, offset and drift") {
  PhasePlan plan;
  plan.correlated_offsets_rad[PrepLabel::kMinusX] = kPi / 30.0;

  CHECK(apply_error_model(plan, PrepLabel::kMinusX, 0, 0.0) ==
        doctest::Approx(kPi + kPi / 30.0).epsilon(1e-15));
  CHECK(apply_error_model(plan, PrepLabel::kPlusX, 0, 0.0) == 0.0);

  PhasePlan zplan;
  zplan.correlated_offsets_rad[PrepLabel::kMinusZ] = 0.17;
  CHECK(apply_error_model(zplan, PrepLabel::kMinusZ, 1, 0.0) ==
        doctest::Approx(kPi / 2.0 + 0.17).epsilon(1e-15));
  CHECK(apply_error_model(zplan, PrepLabel::kMinusZ, 3, 0.02) ==
        doctest::Approx(3.0 * kPi / 2.0 + 0.17 + 0.02).epsilon(1e-15));
}

TEST_CASE("label mapping is deterministic given plan and drift") {
  PhasePlan plan;
  plan.correlated_offsets_rad[PrepLabel::kPlusY] = 0.05;
  const PrepMatrix a = build_prep_matrix({PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                                          PrepLabel::kMinusZ},
                                         plan, true, 0.0123);
  const PrepMatrix b = build_prep_matrix({PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                                          PrepLabel::kMinusZ},
                                         plan, true, 0.0123);
  CHECK(a == b);
}

TEST_CASE("build_prep_matrix produces the ideal A1") {
  const PhasePlan plan;
  const PrepMatrix a = build_prep_matrix(
      {PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY, PrepLabel::kMinusZ}, plan, false);
  CHECK(a.column(0) == PrepVector{1, 1, 0, 0});
  CHECK(a.column(1) == PrepVector{1, -1, 0, 0});
  CHECK(a.column(2) == PrepVector{1, 0, 1, 0});
  CHECK(a.column(3) == PrepVector{1, 0, 0, -1});
}

TEST_CASE("build_prep_matrix rejects four fixed-phase labels") {
  const PhasePlan plan;
  CHECK_THROWS_AS(build_prep_matrix({PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY,
                                     PrepLabel::kMinusY},
                                    plan, false),
                  DegenerateSetError);
  // The same set is rank deficient for the cofactor oracle: c1+c2 = c3+c4.
  const Mat4 degenerate = Mat4::from_columns({PrepVector{1, 1, 0, 0}, PrepVector{1, -1, 0, 0},
                                              PrepVector{1, 0, 1, 0}, PrepVector{1, 0, -1, 0}});
  CHECK(std::abs(oracles::determinant(degenerate)) < 1e-14);
}

TEST_CASE("build_prep_matrix applies the correlated offset to the true phases") {
  PhasePlan plan;
  plan.correlated_offsets_rad[PrepLabel::kMinusX] = kPi / 30.0;
  const PrepMatrix a = build_prep_matrix(
      {PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY, PrepLabel::kMinusZ}, plan, true);
  const PrepVector expected = bloch_from_phase(kPi + kPi / 30.0);
  CHECK(a(kPauliX, 1) == doctest::Approx(expected[kPauliX]).epsilon(1e-14));
  CHECK(a(kPauliY, 1) == doctest::Approx(expected[kPauliY]).epsilon(1e-14));

  // Nominal view is unchanged.
  const PrepMatrix nominal = build_prep_matrix(
      {PrepLabel::kPlusX, PrepLabel::kMinusX, PrepLabel::kPlusY, PrepLabel::kMinusZ}, plan, false);
  CHECK(nominal.column(1) == PrepVector{1, -1, 0, 0});
}

TEST_CASE("label round trip through strings") {
  for (PrepLabel label : kAllPrepLabels) {
    CHECK(parse_prep_label(to_string(label)) == label);
  }
  CHECK_THROWS_AS(parse_prep_label("+Z"), ConfigError);
}
