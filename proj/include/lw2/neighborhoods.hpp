#pragma once

#include <vector>

#include "lw2/norms.hpp"

namespace lw2 {

// For each anchor, the indices of the samples whose inputs lie within delta of
// the anchor's input under the chosen norm. Built once, immutable afterwards.
struct NeighborhoodIndex {
  double delta = 0;
  std::vector<int> anchors;                // anchor sample indices
  std::vector<std::vector<int>> members;   // per anchor, sorted sample indices
  std::vector<int> counts;                 // |members[i]|

  int anchor_count() const { return static_cast<int>(anchors.size()); }
};

// Anchors = every sample. members[i] always contains i itself.
NeighborhoodIndex build_index(const std::vector<std::vector<double>>& inputs,
                              const InputNorm& norm, double delta);

// Anchors at arbitrary points (e.g. a held-out set); member lists index into
// `inputs` and may be empty.
NeighborhoodIndex build_index_at(const std::vector<std::vector<double>>& anchor_points,
                                 const std::vector<std::vector<double>>& inputs,
                                 const InputNorm& norm, double delta);

}  // namespace lw2
