#pragma once

#include <vector>

#include "lw2/util.hpp"

namespace lw2 {

// Uniform-weight empirical distribution over d-dimensional points.
struct PointCloud {
  int dim = 0;
  std::vector<double> pts;  // size() * dim, row-major

  PointCloud() = default;
  PointCloud(int d, std::vector<double> data);
  static PointCloud from_rows(const std::vector<std::vector<double>>& rows);
  static PointCloud from_scalars(const std::vector<double>& values);

  int size() const { return dim == 0 ? 0 : static_cast<int>(pts.size()) / dim; }
  const double* point(int i) const { return pts.data() + static_cast<size_t>(i) * dim; }
};

// A permutation realizing an optimal uniform transport between two equal-size
// clouds: point i of the first cloud is matched with point assignment[i] of
// the second. cost is the attained mean squared distance.
struct CouplingPlan {
  std::vector<int> assignment;
  double cost = 0.0;
};

// Exact squared W2 between two 1-d clouds of equal size via order statistics.
double w2sq_1d_sorted(const PointCloud& a, const PointCloud& b);

// Exact squared W2 for any dimension: dense shortest-augmenting-path
// assignment on the squared-distance matrix.
CouplingPlan w2sq_assignment(const PointCloud& a, const PointCloud& b);

// Exhaustive minimum over all permutations; guard at size <= 8.
double w2sq_bruteforce(const PointCloud& a, const PointCloud& b);

// What the loss evaluators call: sorted matching when dim == 1 (same optimum,
// n log n), the assignment solver otherwise.
CouplingPlan optimal_coupling(const PointCloud& a, const PointCloud& b);

}  // namespace lw2
