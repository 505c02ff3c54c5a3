#include "tfqkd/pauli.hpp"

#include <cmath>
#include <utility>

namespace tfqkd {

Mat4 Mat4::identity() {
  Mat4 m;
  for (int i = 0; i < 4; ++i) {
    m(i, i) = 1.0;
  }
  return m;
}

Mat4 Mat4::from_columns(const std::array<PrepVector, 4>& cols) {
  Mat4 m;
  for (int c = 0; c < 4; ++c) {
    m.set_column(c, cols[static_cast<std::size_t>(c)]);
  }
  return m;
}

PrepVector Mat4::column(int c) const {
  return {(*this)(0, c), (*this)(1, c), (*this)(2, c), (*this)(3, c)};
}

void Mat4::set_column(int c, const PrepVector& v) {
  for (int r = 0; r < 4; ++r) {
    (*this)(r, c) = v[static_cast<std::size_t>(r)];
  }
}

PrepVector Mat4::row(int r) const {
  return {(*this)(r, 0), (*this)(r, 1), (*this)(r, 2), (*this)(r, 3)};
}

void Mat4::set_row(int r, const PrepVector& v) {
  for (int c = 0; c < 4; ++c) {
    (*this)(r, c) = v[static_cast<std::size_t>(c)];
  }
}

Mat4 Mat4::transposed() const {
  Mat4 t;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      t(c, r) = (*this)(r, c);
    }
  }
  return t;
}

double Mat4::max_abs() const {
  double m = 0.0;
  for (double v : e) {
    m = std::max(m, std::abs(v));
  }
  return m;
}

Mat4 operator*(const Mat4& a, const Mat4& b) {
  Mat4 out;
  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double acc = 0.0;
      for (int k = 0; k < 4; ++k) {
        acc += a(r, k) * b(k, c);
      }
      out(r, c) = acc;
    }
  }
  return out;
}

Mat4 operator+(const Mat4& a, const Mat4& b) {
  Mat4 out;
  for (std::size_t i = 0; i < 16; ++i) {
    out.e[i] = a.e[i] + b.e[i];
  }
  return out;
}

Mat4 operator-(const Mat4& a, const Mat4& b) {
  Mat4 out;
  for (std::size_t i = 0; i < 16; ++i) {
    out.e[i] = a.e[i] - b.e[i];
  }
  return out;
}

Mat4 operator*(double s, const Mat4& a) {
  Mat4 out;
  for (std::size_t i = 0; i < 16; ++i) {
    out.e[i] = s * a.e[i];
  }
  return out;
}

double pair_expectation(const PrepVector& a, const PrepVector& b, const MeasMatrix& x) {
  double acc = 0.0;
  for (int k = 0; k < 4; ++k) {
    for (int l = 0; l < 4; ++l) {
      acc += x(k, l) * a[static_cast<std::size_t>(k)] * b[static_cast<std::size_t>(l)];
    }
  }
  return acc;
}

ExpectationMatrix predict_expectations(const PrepMatrix& a, const MeasMatrix& x, const PrepMatrix& b) {
  ExpectationMatrix s;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      s(i, j) = pair_expectation(a.column(i), b.column(j), x);
    }
  }
  return s;
}

namespace {

double max_row_sum(const Mat4& m) {
  double best = 0.0;
  for (int r = 0; r < 4; ++r) {
    double sum = 0.0;
    for (int c = 0; c < 4; ++c) {
      sum += std::abs(m(r, c));
    }
    best = std::max(best, sum);
  }
  return best;
}

}  // namespace

InverseResult invert_transpose(const PrepMatrix& a, double condition_bound) {
  Mat4 lhs = a.transposed();
  Mat4 inv = Mat4::identity();
  const double pivot_floor = std::max(lhs.max_abs(), 1.0) * 1e-14;

  for (int col = 0; col < 4; ++col) {
    int pivot = col;
    for (int r = col + 1; r < 4; ++r) {
      if (std::abs(lhs(r, col)) > std::abs(lhs(pivot, col))) {
        pivot = r;
      }
    }
    if (std::abs(lhs(pivot, col)) <= pivot_floor) {
      throw SingularMatrixError("invert_transpose: pivot vanished in column " + std::to_string(col) +
                                "; the four preparation vectors are linearly dependent");
    }
    if (pivot != col) {
      for (int c = 0; c < 4; ++c) {
        std::swap(lhs(pivot, c), lhs(col, c));
        std::swap(inv(pivot, c), inv(col, c));
      }
    }
    const double p = lhs(col, col);
    for (int c = 0; c < 4; ++c) {
      lhs(col, c) /= p;
      inv(col, c) /= p;
    }
    for (int r = 0; r < 4; ++r) {
      if (r == col) {
        continue;
      }
      const double f = lhs(r, col);
      if (f == 0.0) {
        continue;
      }
      for (int c = 0; c < 4; ++c) {
        lhs(r, c) -= f * lhs(col, c);
        inv(r, c) -= f * inv(col, c);
      }
    }
  }

  // A^-1 = ((A^T)^-1)^T, so the max-row-sum norms of A and A^-1 are both
  // available without a second elimination.
  const double cond = max_row_sum(a) * max_row_sum(inv.transposed());
  if (!(cond < condition_bound)) {
    throw SingularMatrixError("invert_transpose: condition number " + std::to_string(cond) +
                              " exceeds bound " + std::to_string(condition_bound));
  }
  return {inv, cond};
}

Mat4 deviation_matrix(const PrepMatrix& a1, const ExpectationMatrix& s1, const PrepMatrix& a2,
                      const ExpectationMatrix& s2, double condition_bound) {
  const Mat4 inv1 = invert_transpose(a1, condition_bound).inverse;
  const Mat4 inv2 = invert_transpose(a2, condition_bound).inverse;
  return inv1 * s1 - inv2 * s2;
}

}  // namespace tfqkd
