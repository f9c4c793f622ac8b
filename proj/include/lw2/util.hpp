#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace lw2 {

// Row-major dense matrix, just enough for sample/prediction tables.
struct Matrix {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Matrix() = default;
  Matrix(int r, int c, double fill = 0.0) : rows(r), cols(c), a(static_cast<size_t>(r) * c, fill) {}

  double& at(int r, int c) { return a[static_cast<size_t>(r) * cols + c]; }
  double at(int r, int c) const { return a[static_cast<size_t>(r) * cols + c]; }
  double* row(int r) { return a.data() + static_cast<size_t>(r) * cols; }
  const double* row(int r) const { return a.data() + static_cast<size_t>(r) * cols; }
  std::span<const double> row_span(int r) const { return {row(r), static_cast<size_t>(cols)}; }
};

inline bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

inline double sq(double x) { return x * x; }

inline double squared_distance(const double* a, const double* b, int d) {
  double s = 0;
  for (int i = 0; i < d; ++i) s += sq(a[i] - b[i]);
  return s;
}

// Median of an unsorted list (copies; lists here are tiny).
inline double median(std::vector<double> v) {
  if (v.empty()) throw std::invalid_argument("median: empty list");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

[[noreturn]] inline void fail(const std::string& msg) { throw std::runtime_error(msg); }
[[noreturn]] inline void fail_arg(const std::string& msg) { throw std::invalid_argument(msg); }

}  // namespace lw2
