#include "lw2/norms.hpp"

#include <cmath>

namespace lw2 {

InputNorm InputNorm::heterogeneous(std::vector<double> c) {
  if (c.empty()) fail_arg("InputNorm: empty weight vector");
  if (!all_finite(c)) fail_arg("InputNorm: non-finite weight");
  InputNorm n;
  n.kind = Kind::Heterogeneous;
  n.weights = std::move(c);
  return n;
}

double InputNorm::operator()(std::span<const double> x) const {
  double s = 0;
  if (kind == Kind::Homogeneous) {
    for (double xi : x) s += xi * xi;
  } else {
    if (x.size() != weights.size()) fail_arg("InputNorm: dimension mismatch");
    for (size_t i = 0; i < x.size(); ++i) s += sq(weights[i] * x[i]);
  }
  return std::sqrt(s);
}

double InputNorm::distance(std::span<const double> x, std::span<const double> y) const {
  if (x.size() != y.size()) fail_arg("InputNorm: dimension mismatch");
  double s = 0;
  if (kind == Kind::Homogeneous) {
    for (size_t i = 0; i < x.size(); ++i) s += sq(x[i] - y[i]);
  } else {
    if (x.size() != weights.size()) fail_arg("InputNorm: dimension mismatch");
    for (size_t i = 0; i < x.size(); ++i) s += sq(weights[i] * (x[i] - y[i]));
  }
  return std::sqrt(s);
}

std::vector<double> ols_fit(const std::vector<std::vector<double>>& inputs,
                            const std::vector<double>& outputs) {
  const int N = static_cast<int>(inputs.size());
  if (N == 0) fail_arg("ols_fit: no samples");
  const int n = static_cast<int>(inputs.front().size());
  const int p = n + 1;  // intercept + slopes
  if (static_cast<int>(outputs.size()) != N) fail_arg("ols_fit: input/output length mismatch");
  if (N < p + 1) fail_arg("ols_fit: too few samples for the design");

  // Normal equations: G = X^T X, r = X^T y with X = [1, x].
  std::vector<double> G(static_cast<size_t>(p) * p, 0.0), r(p, 0.0), row(p);
  for (int k = 0; k < N; ++k) {
    if (static_cast<int>(inputs[k].size()) != n) fail_arg("ols_fit: ragged inputs");
    row[0] = 1.0;
    for (int i = 0; i < n; ++i) row[i + 1] = inputs[k][i];
    for (int i = 0; i < p; ++i) {
      for (int j = i; j < p; ++j) G[static_cast<size_t>(i) * p + j] += row[i] * row[j];
      r[i] += row[i] * outputs[k];
    }
  }
  for (int i = 0; i < p; ++i)
    for (int j = 0; j < i; ++j) G[static_cast<size_t>(i) * p + j] = G[static_cast<size_t>(j) * p + i];

  double max_diag = 0;
  for (int i = 0; i < p; ++i) max_diag = std::max(max_diag, G[static_cast<size_t>(i) * p + i]);
  // Tiny ridge keeps the factorization from dying on benign rounding; a pivot
  // collapsing to this scale still signals rank deficiency below.
  const double ridge = 1e-10 * std::max(1.0, max_diag);
  for (int i = 0; i < p; ++i) G[static_cast<size_t>(i) * p + i] += ridge;

  // Cholesky G = L L^T.
  std::vector<double> L(static_cast<size_t>(p) * p, 0.0);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = G[static_cast<size_t>(i) * p + j];
      for (int k = 0; k < j; ++k) s -= L[static_cast<size_t>(i) * p + k] * L[static_cast<size_t>(j) * p + k];
      if (i == j) {
        if (s <= 100.0 * ridge) fail_arg("ols_fit: rank-deficient design");
        L[static_cast<size_t>(i) * p + i] = std::sqrt(s);
      } else {
        L[static_cast<size_t>(i) * p + j] = s / L[static_cast<size_t>(j) * p + j];
      }
    }
  }

  // Solve L z = r, then L^T c = z.
  std::vector<double> z(p), c(p);
  for (int i = 0; i < p; ++i) {
    double s = r[i];
    for (int k = 0; k < i; ++k) s -= L[static_cast<size_t>(i) * p + k] * z[k];
    z[i] = s / L[static_cast<size_t>(i) * p + i];
  }
  for (int i = p - 1; i >= 0; --i) {
    double s = z[i];
    for (int k = i + 1; k < p; ++k) s -= L[static_cast<size_t>(k) * p + i] * c[k];
    c[i] = s / L[static_cast<size_t>(i) * p + i];
  }
  return c;
}

InputNorm fit_hetero_norm(const std::vector<std::vector<double>>& inputs,
                          const std::vector<double>& outputs) {
  std::vector<double> coef = ols_fit(inputs, outputs);
  return InputNorm::heterogeneous(std::vector<double>(coef.begin() + 1, coef.end()));
}

}  // namespace lw2
