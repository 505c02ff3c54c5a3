#pragma once

#include <array>

#include "tfqkd/errors.hpp"

namespace tfqkd {

// Pauli component order used throughout: I, X, Y, Z.
enum PauliAxis : int { kPauliI = 0, kPauliX = 1, kPauliY = 2, kPauliZ = 3 };

// Pauli-basis coefficient vector of one state preparation, with the
// convention that the identity component of a physical state is 1.
using PrepVector = std::array<double, 4>;

// Dense 4x4 real matrix, row-major.
struct Mat4 {
  std::array<double, 16> e{};

  double& operator()(int r, int c) { return e[static_cast<std::size_t>(r) * 4 + static_cast<std::size_t>(c)]; }
  double operator()(int r, int c) const {
    return e[static_cast<std::size_t>(r) * 4 + static_cast<std::size_t>(c)];
  }

  static Mat4 identity();
  static Mat4 zero() { return {}; }
  static Mat4 from_columns(const std::array<PrepVector, 4>& cols);

  PrepVector column(int c) const;
  void set_column(int c, const PrepVector& v);
  PrepVector row(int r) const;
  void set_row(int r, const PrepVector& v);

  Mat4 transposed() const;
  double max_abs() const;

  friend Mat4 operator*(const Mat4& a, const Mat4& b);
  friend Mat4 operator+(const Mat4& a, const Mat4& b);
  friend Mat4 operator-(const Mat4& a, const Mat4& b);
  friend Mat4 operator*(double s, const Mat4& a);
  friend bool operator==(const Mat4& a, const Mat4& b) = default;
};

using PrepMatrix = Mat4;         // columns are preparation vectors
using MeasMatrix = Mat4;         // Pauli coefficients of the joint measurement
using ExpectationMatrix = Mat4;  // one expectation value per preparation pair

// M-matrix together with its per-element uncertainty.
struct DeviationMatrix {
  Mat4 m;
  Mat4 sigma;
};

inline constexpr double kDefaultConditionBound = 1e8;

// Expectation value for a single preparation pair:
// sum_{k,l} x(k,l) * a[k] * b[l]. Bilinear in a and b.
double pair_expectation(const PrepVector& a, const PrepVector& b, const MeasMatrix& x);

// Full table of expectation values, entry (i,j) for column i of `a` against
// column j of `b`. Equals the matrix product A^T X B.
ExpectationMatrix predict_expectations(const PrepMatrix& a, const MeasMatrix& x, const PrepMatrix& b);

struct InverseResult {
  Mat4 inverse;             // (A^T)^-1
  double condition_number;  // max-row-sum estimate, |A| * |A^-1|
};

// Inverts A^T by partial-pivot Gauss-Jordan elimination. Throws
// SingularMatrixError when a pivot vanishes or the condition number exceeds
// the bound, i.e. when the four preparations are not linearly independent.
InverseResult invert_transpose(const PrepMatrix& a, double condition_bound = kDefaultConditionBound);

// M = (A1^T)^-1 S1 - (A2^T)^-1 S2. Zero iff one measurement matrix explains
// both preparation sets.
Mat4 deviation_matrix(const PrepMatrix& a1, const ExpectationMatrix& s1, const PrepMatrix& a2,
                      const ExpectationMatrix& s2, double condition_bound = kDefaultConditionBound);

}  // namespace tfqkd
