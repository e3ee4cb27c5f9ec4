#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "finsler/jets.hpp"

namespace finsler {

inline constexpr double kConditionWarning = 1e10;

class SingularMatrixError : public std::runtime_error {
 public:
  SingularMatrixError(const std::string& what, double condition)
      : std::runtime_error(what), condition_(condition) {}
  double condition() const { return condition_; }

 private:
  double condition_;
};

class NotPositiveDefiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <class T>
struct Inverse {
  std::vector<T> inverse;
  // 1-norm condition estimate of the value matrix
  double condition = 1.0;
  bool ill_conditioned() const { return condition > kConditionWarning; }
};

namespace detail {

inline double norm1(const std::vector<double>& m, int n) {
  double best = 0.0;
  for (int j = 0; j < n; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += std::abs(m[i * n + j]);
    best = std::max(best, s);
  }
  return best;
}

}  // namespace detail

// Gauss-Jordan elimination with partial pivoting on the value parts.
template <class T>
Inverse<T> invert(std::span<const T> m, int n) {
  if (static_cast<int>(m.size()) != n * n) throw std::invalid_argument("matrix size mismatch");
  std::vector<T> a(m.begin(), m.end());
  std::vector<T> inv(n * n, constant_like(m[0], 0.0));
  for (int i = 0; i < n; ++i) inv[i * n + i] = constant_like(m[0], 1.0);
  std::vector<double> values(n * n);
  for (int i = 0; i < n * n; ++i) values[i] = value_of(m[i]);
  const double anorm = detail::norm1(values, n);

  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(value_of(a[r * n + col])) > std::abs(value_of(a[piv * n + col]))) piv = r;
    if (value_of(a[piv * n + col]) == 0.0)
      throw SingularMatrixError("singular matrix (zero pivot)",
                                std::numeric_limits<double>::infinity());
    if (piv != col) {
      for (int j = 0; j < n; ++j) {
        std::swap(a[piv * n + j], a[col * n + j]);
        std::swap(inv[piv * n + j], inv[col * n + j]);
      }
    }
    const T p = a[col * n + col];
    for (int j = 0; j < n; ++j) {
      a[col * n + j] = a[col * n + j] / p;
      inv[col * n + j] = inv[col * n + j] / p;
    }
    for (int r = 0; r < n; ++r) {
      if (r == col) continue;
      const T f = a[r * n + col];
      if (value_of(f) == 0.0 && std::is_same_v<T, double>) continue;
      for (int j = 0; j < n; ++j) {
        a[r * n + j] = a[r * n + j] - f * a[col * n + j];
        inv[r * n + j] = inv[r * n + j] - f * inv[col * n + j];
      }
    }
  }
  std::vector<double> inv_values(n * n);
  for (int i = 0; i < n * n; ++i) inv_values[i] = value_of(inv[i]);
  const double cond = anorm * detail::norm1(inv_values, n);
  if (!std::isfinite(cond) || cond > 1e15)
    throw SingularMatrixError("numerically singular matrix, condition estimate " +
                                  std::to_string(cond),
                              cond);
  return {std::move(inv), cond};
}

template <class T>
T determinant(std::span<const T> m, int n) {
  if (static_cast<int>(m.size()) != n * n) throw std::invalid_argument("matrix size mismatch");
  std::vector<T> a(m.begin(), m.end());
  T det = constant_like(m[0], 1.0);
  for (int col = 0; col < n; ++col) {
    int piv = col;
    for (int r = col + 1; r < n; ++r)
      if (std::abs(value_of(a[r * n + col])) > std::abs(value_of(a[piv * n + col]))) piv = r;
    if (value_of(a[piv * n + col]) == 0.0) return constant_like(m[0], 0.0);
    if (piv != col) {
      for (int j = 0; j < n; ++j) std::swap(a[piv * n + j], a[col * n + j]);
      det = -det;
    }
    const T p = a[col * n + col];
    det = det * p;
    for (int r = col + 1; r < n; ++r) {
      const T f = a[r * n + col] / p;
      for (int j = col; j < n; ++j) a[r * n + j] = a[r * n + j] - f * a[col * n + j];
    }
  }
  return det;
}

// Sylvester's criterion on the value matrix.
inline bool leading_minors_positive(std::span<const double> m, int n) {
  for (int k = 1; k <= n; ++k) {
    std::vector<double> sub(k * k);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) sub[i * k + j] = m[i * n + j];
    if (!(determinant<double>(sub, k) > 0.0)) return false;
  }
  return true;
}

template <class T>
std::vector<double> values_of(std::span<const T> v) {
  std::vector<double> out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = value_of(v[i]);
  return out;
}

// Numerical rank of a rows x cols matrix by Gaussian elimination with
// full pivoting; entries below rel_tol * max|entry| count as zero.
inline int matrix_rank(std::vector<double> m, int rows, int cols, double rel_tol = 1e-10) {
  double scale = 0.0;
  for (double v : m) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0;
  int rank = 0;
  std::vector<bool> used_col(cols, false);
  std::vector<bool> used_row(rows, false);
  for (int step = 0; step < std::min(rows, cols); ++step) {
    int pr = -1, pc = -1;
    double best = rel_tol * scale;
    for (int r = 0; r < rows; ++r) {
      if (used_row[r]) continue;
      for (int c = 0; c < cols; ++c)
        if (!used_col[c] && std::abs(m[r * cols + c]) > best) {
          best = std::abs(m[r * cols + c]);
          pr = r;
          pc = c;
        }
    }
    if (pr < 0) break;
    used_row[pr] = used_col[pc] = true;
    ++rank;
    for (int r = 0; r < rows; ++r) {
      if (used_row[r]) continue;
      const double f = m[r * cols + pc] / m[pr * cols + pc];
      for (int c = 0; c < cols; ++c) m[r * cols + c] -= f * m[pr * cols + c];
    }
  }
  return rank;
}

}  // namespace finsler
