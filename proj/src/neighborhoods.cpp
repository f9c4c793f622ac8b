#include "lw2/neighborhoods.hpp"

#include <algorithm>

namespace lw2 {

namespace {

void check_inputs(const std::vector<std::vector<double>>& inputs, double delta) {
  if (delta <= 0) fail_arg("build_index: delta must be > 0");
  if (inputs.empty()) fail_arg("build_index: empty input set");
  const size_t n = inputs.front().size();
  for (const auto& x : inputs) {
    if (x.size() != n) fail_arg("build_index: ragged inputs");
    if (!all_finite(x)) fail_arg("build_index: non-finite input");
  }
}

}  // namespace

NeighborhoodIndex build_index(const std::vector<std::vector<double>>& inputs,
                              const InputNorm& norm, double delta) {
  check_inputs(inputs, delta);
  const int N = static_cast<int>(inputs.size());
  NeighborhoodIndex idx;
  idx.delta = delta;
  idx.anchors.resize(N);
  idx.members.resize(N);
  idx.counts.resize(N);
  for (int i = 0; i < N; ++i) idx.anchors[i] = i;
  // O(N^2) scan, symmetric distances computed once
  for (int i = 0; i < N; ++i) {
    idx.members[i].push_back(i);
  }
  for (int i = 0; i < N; ++i) {
    for (int j = i + 1; j < N; ++j) {
      if (norm.distance(inputs[i], inputs[j]) <= delta) {
        idx.members[i].push_back(j);
        idx.members[j].push_back(i);
      }
    }
  }
  for (int i = 0; i < N; ++i) {
    auto& m = idx.members[i];
    std::sort(m.begin(), m.end());
    idx.counts[i] = static_cast<int>(m.size());
  }
  return idx;
}

NeighborhoodIndex build_index_at(const std::vector<std::vector<double>>& anchor_points,
                                 const std::vector<std::vector<double>>& inputs,
                                 const InputNorm& norm, double delta) {
  check_inputs(inputs, delta);
  if (anchor_points.empty()) fail_arg("build_index_at: empty anchor set");
  NeighborhoodIndex idx;
  idx.delta = delta;
  const int A = static_cast<int>(anchor_points.size());
  const int N = static_cast<int>(inputs.size());
  idx.anchors.resize(A);
  idx.members.resize(A);
  idx.counts.resize(A);
  for (int a = 0; a < A; ++a) {
    idx.anchors[a] = a;
    for (int j = 0; j < N; ++j) {
      if (norm.distance(anchor_points[a], inputs[j]) <= delta) idx.members[a].push_back(j);
    }
    idx.counts[a] = static_cast<int>(idx.members[a].size());
  }
  return idx;
}

}  // namespace lw2
