#include "lw2/metrics.hpp"

#include <cmath>

namespace lw2 {

MomentErrorReport mean_sd_error(std::span<const double> truth_mean,
                                std::span<const double> truth_sd,
                                std::span<const double> pred_mean,
                                std::span<const double> pred_sd) {
  const size_t A = truth_mean.size();
  if (truth_sd.size() != A || pred_mean.size() != A || pred_sd.size() != A || A == 0)
    fail_arg("mean_sd_error: misaligned anchor lists");
  MomentErrorReport rep;
  double num_m = 0, den_m = 0, num_s = 0, den_s = 0;
  rep.per_anchor_mean_gap.resize(A);
  rep.per_anchor_sd_gap.resize(A);
  for (size_t i = 0; i < A; ++i) {
    rep.per_anchor_mean_gap[i] = std::abs(truth_mean[i] - pred_mean[i]);
    rep.per_anchor_sd_gap[i] = std::abs(truth_sd[i] - pred_sd[i]);
    num_m += rep.per_anchor_mean_gap[i];
    den_m += std::abs(truth_mean[i]);
    num_s += rep.per_anchor_sd_gap[i];
    den_s += std::abs(truth_sd[i]);
  }
  if (den_m == 0 || den_s == 0) fail_arg("mean_sd_error: zero denominator");
  rep.mean_error = num_m / den_m;
  rep.sd_error = num_s / den_s;
  return rep;
}

std::pair<double, double> param_error(const LinearGaussianParams& truth,
                                      const LinearGaussianParams& est) {
  truth.validate();
  est.validate();
  if (truth.n() != est.n()) fail_arg("param_error: dimension mismatch");
  double num_b = 0, den_b = 0, num_s = 0, den_s = 0;
  for (size_t i = 0; i < truth.mean.size(); ++i) {
    num_b += std::abs(truth.mean[i] - est.mean[i]);
    den_b += std::abs(truth.mean[i]);
    num_s += std::abs(std::abs(truth.spread_raw[i]) - std::abs(est.spread_raw[i]));
    den_s += std::abs(truth.spread_raw[i]);
  }
  if (den_b == 0 || den_s == 0) fail_arg("param_error: zero denominator");
  return {num_b / den_b, num_s / den_s};
}

ConditionalMoments conditional_moments(std::span<const double> outputs,
                                       const NeighborhoodIndex& index, int min_count) {
  if (min_count < 1) fail_arg("conditional_moments: min_count must be >= 1");
  ConditionalMoments cm;
  for (int a = 0; a < index.anchor_count(); ++a) {
    const auto& m = index.members[a];
    if (static_cast<int>(m.size()) < min_count) {
      cm.excluded.push_back(a);
      continue;
    }
    double mean = 0;
    for (int j : m) {
      if (j < 0 || j >= static_cast<int>(outputs.size()))
        fail_arg("conditional_moments: index out of range");
      mean += outputs[j];
    }
    mean /= m.size();
    double var = 0;
    for (int j : m) var += sq(outputs[j] - mean);
    var /= m.size();
    cm.anchor.push_back(a);
    cm.mean.push_back(mean);
    cm.sd.push_back(std::sqrt(var));
  }
  if (cm.anchor.empty()) fail_arg("conditional_moments: no qualifying anchors");
  return cm;
}

double h_rate(double N, int d) {
  if (N <= 0 || d <= 0) fail_arg("h_rate: nonpositive input");
  if (d <= 4) return 2.0 * std::pow(N, -0.25) * std::sqrt(std::log1p(N));
  return 2.0 * std::pow(N, -1.0 / d);
}

double theorem1_bound(const BoundInputs& in) {
  if (in.M <= 0 || in.L <= 0 || in.C <= 0 || in.N <= 0 || in.delta <= 0 || in.n <= 0 ||
      in.counts.empty())
    fail_arg("theorem1_bound: inputs must be positive");
  double mean_h = 0;
  for (int c : in.counts) {
    if (c < 1) fail_arg("theorem1_bound: counts must be >= 1");
    mean_h += h_rate(static_cast<double>(c), in.n);
  }
  mean_h /= in.counts.size();
  return 4.0 * in.M / std::sqrt(in.N) + 8.0 * in.C * in.M * mean_h +
         8.0 * std::sqrt(in.M) * in.L * in.delta;
}

}  // namespace lw2
