#pragma once

#include <span>
#include <vector>

#include "lw2/models.hpp"
#include "lw2/neighborhoods.hpp"

namespace lw2 {

struct MomentErrorReport {
  double mean_error = 0;
  double sd_error = 0;
  std::vector<double> per_anchor_mean_gap;  // |E[y] - E[yhat]| per anchor
  std::vector<double> per_anchor_sd_gap;
};

// Relative errors aggregated over aligned anchor lists:
//   sum |E[y]-E[yhat]| / sum |E[y]|   and the same with SDs.
MomentErrorReport mean_sd_error(std::span<const double> truth_mean,
                                std::span<const double> truth_sd,
                                std::span<const double> pred_mean,
                                std::span<const double> pred_sd);

// Average relative errors of the recovered linear-Gaussian parameters;
// spreads compare absolute values, so the sign of the raw storage is ignored.
std::pair<double, double> param_error(const LinearGaussianParams& truth,
                                      const LinearGaussianParams& est);

struct ConditionalMoments {
  std::vector<int> anchor;     // anchors that met the count threshold
  std::vector<double> mean;
  std::vector<double> sd;      // population convention (divide by N)
  std::vector<int> excluded;   // anchors below the threshold
};

// Empirical mean/SD of scalar outputs inside each qualifying neighborhood.
ConditionalMoments conditional_moments(std::span<const double> outputs,
                                       const NeighborhoodIndex& index, int min_count);

struct BoundInputs {
  double M = 0;                // bound on the squared output norm
  double L = 0;                // Lipschitz constant
  double C = 0;                // sampling-rate constant
  double N = 0;                // total samples
  double delta = 0;
  std::vector<int> counts;     // per-anchor neighborhood sizes
  int n = 0;                   // input dimension
};

// Sample-complexity rate factor: 2 N^(-1/4) log(1+N)^(1/2) when d <= 4,
// else 2 N^(-1/d).
double h_rate(double N, int d);

// Estimator error bound 4M/sqrt(N) + 8CM mean_h + 8 sqrt(M) L delta.
double theorem1_bound(const BoundInputs& in);

}  // namespace lw2
