#include "lw2/transport.hpp"

#include <algorithm>
#include <limits>
#include <numeric>

namespace lw2 {

PointCloud::PointCloud(int d, std::vector<double> data) : dim(d), pts(std::move(data)) {
  if (dim <= 0) fail_arg("PointCloud: dimension must be positive");
  if (pts.empty()) fail_arg("PointCloud: empty cloud");
  if (static_cast<int>(pts.size()) % dim != 0) fail_arg("PointCloud: data size not a multiple of dim");
  if (!all_finite(pts)) fail_arg("PointCloud: non-finite coordinate");
}

PointCloud PointCloud::from_rows(const std::vector<std::vector<double>>& rows) {
  if (rows.empty()) fail_arg("PointCloud: empty cloud");
  int d = static_cast<int>(rows.front().size());
  std::vector<double> flat;
  flat.reserve(rows.size() * d);
  for (const auto& r : rows) {
    if (static_cast<int>(r.size()) != d) fail_arg("PointCloud: ragged rows");
    flat.insert(flat.end(), r.begin(), r.end());
  }
  return PointCloud(d, std::move(flat));
}

PointCloud PointCloud::from_scalars(const std::vector<double>& values) {
  return PointCloud(1, values);
}

namespace {

void check_pair(const PointCloud& a, const PointCloud& b) {
  if (a.dim != b.dim) fail_arg("transport: dimension mismatch");
  if (a.size() != b.size()) fail_arg("transport: size mismatch");
  if (a.size() < 1) fail_arg("transport: empty clouds");
}

}  // namespace

double w2sq_1d_sorted(const PointCloud& a, const PointCloud& b) {
  check_pair(a, b);
  if (a.dim != 1) fail_arg("w2sq_1d_sorted: dimension must be 1");
  std::vector<double> sa = a.pts, sb = b.pts;
  std::sort(sa.begin(), sa.end());
  std::sort(sb.begin(), sb.end());
  double s = 0;
  for (size_t i = 0; i < sa.size(); ++i) s += sq(sa[i] - sb[i]);
  return s / static_cast<double>(sa.size());
}

CouplingPlan w2sq_assignment(const PointCloud& a, const PointCloud& b) {
  check_pair(a, b);
  const int n = a.size();

  // Dense cost matrix C[i][j] = ||a_i - b_j||^2.
  std::vector<double> cost(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      cost[static_cast<size_t>(i) * n + j] = squared_distance(a.point(i), b.point(j), a.dim);

  // Shortest augmenting path with dual potentials (1-indexed internals).
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> match(n + 1, 0);  // match[j] = row assigned to column j
  std::vector<int> way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    match[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      int i0 = match[j0], j1 = 0;
      double delta = inf;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        double cur = cost[static_cast<size_t>(i0 - 1) * n + (j - 1)] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[match[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (match[j0] != 0);
    do {
      int j1 = way[j0];
      match[j0] = match[j1];
      j0 = j1;
    } while (j0);
  }

  CouplingPlan plan;
  plan.assignment.assign(n, -1);
  for (int j = 1; j <= n; ++j)
    if (match[j]) plan.assignment[match[j] - 1] = j - 1;
  double total = 0;
  for (int i = 0; i < n; ++i) total += cost[static_cast<size_t>(i) * n + plan.assignment[i]];
  plan.cost = total / n;
  return plan;
}

double w2sq_bruteforce(const PointCloud& a, const PointCloud& b) {
  check_pair(a, b);
  const int n = a.size();
  if (n > 8) fail_arg("w2sq_bruteforce: size > 8");
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0;
    for (int i = 0; i < n; ++i) s += squared_distance(a.point(i), b.point(perm[i]), a.dim);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best / n;
}

CouplingPlan optimal_coupling(const PointCloud& a, const PointCloud& b) {
  check_pair(a, b);
  if (a.dim != 1) return w2sq_assignment(a, b);

  // Sorted matching is optimal in 1-d; recover the permutation through the
  // sort orders of both clouds.
  const int n = a.size();
  std::vector<int> oa(n), ob(n);
  std::iota(oa.begin(), oa.end(), 0);
  std::iota(ob.begin(), ob.end(), 0);
  std::sort(oa.begin(), oa.end(), [&](int i, int j) { return a.pts[i] < a.pts[j]; });
  std::sort(ob.begin(), ob.end(), [&](int i, int j) { return b.pts[i] < b.pts[j]; });
  CouplingPlan plan;
  plan.assignment.assign(n, -1);
  double s = 0;
  for (int r = 0; r < n; ++r) {
    plan.assignment[oa[r]] = ob[r];
    s += sq(a.pts[oa[r]] - b.pts[ob[r]]);
  }
  plan.cost = s / n;
  return plan;
}

}  // namespace lw2
