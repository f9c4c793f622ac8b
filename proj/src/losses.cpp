#include "lw2/losses.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace lw2 {

LossFamily parse_loss_family(const std::string& s) {
  if (s == "w2") return LossFamily::W2;
  if (s == "mmd") return LossFamily::Mmd;
  if (s == "mse") return LossFamily::Mse;
  if (s == "mean2var") return LossFamily::Mean2Var;
  fail_arg("unknown loss family: " + s);
}

std::string to_string(const LossKind& k) {
  std::string f;
  switch (k.family) {
    case LossFamily::W2: f = "w2"; break;
    case LossFamily::Mmd: f = "mmd"; break;
    case LossFamily::Mse: f = "mse"; break;
    case LossFamily::Mean2Var: f = "mean2var"; break;
  }
  return (k.locality == Locality::Local ? "local-" : "global-") + f;
}

namespace {

constexpr int kMmdKernels = 5;

void check_tables(const Matrix& truth, const Matrix& preds) {
  if (truth.rows != preds.rows || truth.cols != preds.cols)
    fail_arg("loss: truth/prediction table mismatch");
  if (truth.rows == 0) fail_arg("loss: empty tables");
  if (!all_finite(truth.a) || !all_finite(preds.a)) fail_arg("loss: non-finite value");
}

PointCloud gather(const Matrix& m, const std::vector<int>& members) {
  std::vector<double> flat;
  flat.reserve(members.size() * m.cols);
  for (int j : members) {
    if (j < 0 || j >= m.rows) fail_arg("loss: member index out of range");
    flat.insert(flat.end(), m.row(j), m.row(j) + m.cols);
  }
  return PointCloud(m.cols, std::move(flat));
}

// Mean squared distance over all distinct unordered pairs of the pooled
// truth+prediction cloud; the base of the MMD bandwidth ladder.
double mmd_bandwidth_base(const Matrix& truth, const Matrix& preds,
                          const std::vector<int>& members) {
  const int k = static_cast<int>(members.size());
  const int d = truth.cols;
  std::vector<const double*> pool;
  pool.reserve(2 * k);
  for (int j : members) pool.push_back(truth.row(j));
  for (int j : members) pool.push_back(preds.row(j));
  double s = 0;
  long pairs = 0;
  for (size_t i = 0; i < pool.size(); ++i)
    for (size_t j = i + 1; j < pool.size(); ++j) {
      s += squared_distance(pool[i], pool[j], d);
      ++pairs;
    }
  return pairs ? s / static_cast<double>(pairs) : 0.0;
}

double mmd_kernel(double r2, double beta) {
  double s = 0;
  for (int q = 0; q < kMmdKernels; ++q) s += std::exp(-r2 / (beta * std::ldexp(1.0, q - 2)));
  return s;
}

// Per-anchor value-side statistics. coupling/beta outputs are filled only for
// the families that use them.
double anchor_term_value(const LossKind& kind, const Matrix& truth, const Matrix& preds,
                         const std::vector<int>& members, CouplingPlan* coupling_out,
                         double* beta_out) {
  const int k = static_cast<int>(members.size());
  const int d = truth.cols;
  switch (kind.family) {
    case LossFamily::W2: {
      CouplingPlan plan = optimal_coupling(gather(truth, members), gather(preds, members));
      double term = plan.cost;
      if (coupling_out) *coupling_out = std::move(plan);
      return term;
    }
    case LossFamily::Mse: {
      double s = 0;
      for (int j : members) s += squared_distance(truth.row(j), preds.row(j), d);
      return s / k;
    }
    case LossFamily::Mean2Var: {
      double mse = 0;
      for (int j : members) mse += squared_distance(truth.row(j), preds.row(j), d);
      mse /= k;
      // spread term: unnormalized sums of squared deviations from the mean
      std::vector<double> mt(d, 0.0), mp(d, 0.0);
      for (int j : members)
        for (int c = 0; c < d; ++c) {
          mt[c] += truth.at(j, c);
          mp[c] += preds.at(j, c);
        }
      for (int c = 0; c < d; ++c) {
        mt[c] /= k;
        mp[c] /= k;
      }
      double st = 0, sp = 0;
      for (int j : members)
        for (int c = 0; c < d; ++c) {
          st += sq(truth.at(j, c) - mt[c]);
          sp += sq(preds.at(j, c) - mp[c]);
        }
      return mse + std::abs(st - sp);
    }
    case LossFamily::Mmd: {
      double beta = mmd_bandwidth_base(truth, preds, members);
      if (beta_out) *beta_out = beta;
      if (beta <= 0.0) return 0.0;  // pooled cloud collapsed to one point
      double tt = 0, tp = 0, pp = 0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          tt += mmd_kernel(squared_distance(truth.row(members[i]), truth.row(members[j]), d), beta);
          tp += mmd_kernel(squared_distance(truth.row(members[i]), preds.row(members[j]), d), beta);
          pp += mmd_kernel(squared_distance(preds.row(members[i]), preds.row(members[j]), d), beta);
        }
      double kk = static_cast<double>(k) * k;
      return tt / kk - 2.0 * tp / kk + pp / kk;
    }
  }
  fail("unreachable");
}

std::vector<int> all_indices(int n) {
  std::vector<int> v(n);
  std::iota(v.begin(), v.end(), 0);
  return v;
}

void check_index(const NeighborhoodIndex* index, const LossKind& kind, int rows) {
  if (kind.locality == Locality::Local) {
    if (!index) fail_arg("loss: local kind requires a neighborhood index");
    for (const auto& m : index->members)
      for (int j : m)
        if (j < 0 || j >= rows) fail_arg("loss: index refers to samples outside the tables");
  }
}

}  // namespace

LossReport evaluate_loss(const LossKind& kind, const Matrix& truth, const Matrix& preds,
                         const NeighborhoodIndex* index) {
  check_tables(truth, preds);
  check_index(index, kind, truth.rows);

  LossReport rep;
  if (kind.locality == Locality::Global) {
    const auto members = all_indices(truth.rows);
    CouplingPlan plan;
    double beta = 0;
    double term = anchor_term_value(kind, truth, preds, members, &plan, &beta);
    if (kind.family == LossFamily::W2) rep.couplings.push_back(std::move(plan));
    if (kind.family == LossFamily::Mmd) rep.mmd_beta.push_back(beta);
    if (kind.family == LossFamily::Mmd && term < 0) {
      rep.clamped = true;
      term = 0;
    }
    rep.value = term;
    return rep;
  }

  const int A = index->anchor_count();
  rep.per_anchor.resize(A);
  if (kind.family == LossFamily::W2) rep.couplings.resize(A);
  if (kind.family == LossFamily::Mmd) rep.mmd_beta.resize(A);

  // Anchors sharing a member list share the statistic; compute once.
  std::map<std::vector<int>, int> seen;  // members -> representative anchor
  double total = 0;
  for (int a = 0; a < A; ++a) {
    const auto& members = index->members[a];
    if (members.empty()) fail_arg("loss: anchor with empty neighborhood");
    auto [it, fresh] = seen.try_emplace(members, a);
    if (fresh) {
      CouplingPlan plan;
      double beta = 0;
      double term = anchor_term_value(kind, truth, preds, members, &plan, &beta);
      if (kind.family == LossFamily::Mmd && term < 0) {
        rep.clamped = true;
        term = 0;
      }
      rep.per_anchor[a] = term;
      if (kind.family == LossFamily::W2) rep.couplings[a] = std::move(plan);
      if (kind.family == LossFamily::Mmd) rep.mmd_beta[a] = beta;
    } else {
      int r = it->second;
      rep.per_anchor[a] = rep.per_anchor[r];
      if (kind.family == LossFamily::W2) rep.couplings[a] = rep.couplings[r];
      if (kind.family == LossFamily::Mmd) rep.mmd_beta[a] = rep.mmd_beta[r];
    }
    total += rep.per_anchor[a];
  }
  rep.value = total / A;
  return rep;
}

LossReport local_w2_loss(const Matrix& truth, const Matrix& preds,
                         const NeighborhoodIndex& index) {
  return evaluate_loss({LossFamily::W2, Locality::Local}, truth, preds, &index);
}

LossReport global_w2_loss(const Matrix& truth, const Matrix& preds) {
  return evaluate_loss({LossFamily::W2, Locality::Global}, truth, preds, nullptr);
}

LossReport baseline_loss(const LossKind& kind, const Matrix& truth, const Matrix& preds,
                         const NeighborhoodIndex* index) {
  if (kind.family == LossFamily::W2) fail_arg("baseline_loss: use the w2 entry points");
  return evaluate_loss(kind, truth, preds, index);
}

namespace {

// Tape-side anchor statistic. Predictions are supplied through an accessor so
// the same code serves full-graph builds (model subgraphs) and seed
// computations (leaf Vars).
template <class PredAt>
Var anchor_term_on_tape(Tape& t, const LossKind& kind, const Matrix& truth,
                        const std::vector<int>& members, const PredAt& pred,
                        const CouplingPlan* coupling, double beta) {
  const int k = static_cast<int>(members.size());
  const int d = truth.cols;
  switch (kind.family) {
    case LossFamily::W2: {
      if (!coupling || static_cast<int>(coupling->assignment.size()) != k)
        fail_arg("loss_on_tape: missing or mismatched frozen coupling");
      Var acc = make_var(t, 0.0);
      for (int i = 0; i < k; ++i) {
        int tj = members[i];
        int pj = members[coupling->assignment[i]];
        for (int c = 0; c < d; ++c) acc = acc + vsquare(pred(pj, c) - truth.at(tj, c));
      }
      return acc * (1.0 / k);
    }
    case LossFamily::Mse: {
      Var acc = make_var(t, 0.0);
      for (int j : members)
        for (int c = 0; c < d; ++c) acc = acc + vsquare(pred(j, c) - truth.at(j, c));
      return acc * (1.0 / k);
    }
    case LossFamily::Mean2Var: {
      Var mse = make_var(t, 0.0);
      for (int j : members)
        for (int c = 0; c < d; ++c) mse = mse + vsquare(pred(j, c) - truth.at(j, c));
      mse = mse * (1.0 / k);
      double st = 0;
      {
        std::vector<double> mt(d, 0.0);
        for (int j : members)
          for (int c = 0; c < d; ++c) mt[c] += truth.at(j, c);
        for (int c = 0; c < d; ++c) mt[c] /= k;
        for (int j : members)
          for (int c = 0; c < d; ++c) st += sq(truth.at(j, c) - mt[c]);
      }
      Var sp = make_var(t, 0.0);
      for (int c = 0; c < d; ++c) {
        Var mean = make_var(t, 0.0);
        for (int j : members) mean = mean + pred(j, c);
        mean = mean * (1.0 / k);
        for (int j : members) sp = sp + vsquare(pred(j, c) - mean);
      }
      return mse + vabs(sp * -1.0 + st);
    }
    case LossFamily::Mmd: {
      if (beta <= 0.0) return make_var(t, 0.0);
      const double kk = static_cast<double>(k) * k;
      // truth-truth block depends only on the frozen bandwidth: a constant
      double tt = 0;
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j)
          tt += mmd_kernel(squared_distance(truth.row(members[i]), truth.row(members[j]), d), beta);
      auto kernel = [&](Var r2) {
        Var s = make_var(t, 0.0);
        for (int q = 0; q < kMmdKernels; ++q)
          s = s + vexp(r2 * (-1.0 / (beta * std::ldexp(1.0, q - 2))));
        return s;
      };
      Var tp = make_var(t, 0.0);
      for (int i = 0; i < k; ++i)
        for (int j = 0; j < k; ++j) {
          Var r2 = make_var(t, 0.0);
          for (int c = 0; c < d; ++c) r2 = r2 + vsquare(pred(members[j], c) - truth.at(members[i], c));
          tp = tp + kernel(r2);
        }
      // prediction-prediction block: diagonal is the constant k * kMmdKernels
      Var pp = make_var(t, static_cast<double>(k) * kMmdKernels);
      for (int i = 0; i < k; ++i)
        for (int j = i + 1; j < k; ++j) {
          Var r2 = make_var(t, 0.0);
          for (int c = 0; c < d; ++c)
            r2 = r2 + vsquare(pred(members[i], c) - pred(members[j], c));
          pp = pp + kernel(r2) * 2.0;
        }
      return (tp * (-2.0 / kk) + tt / kk) + pp * (1.0 / kk);
    }
  }
  fail("unreachable");
}

}  // namespace

Var loss_on_tape(Tape& tape, const LossKind& kind, const Matrix& truth,
                 const std::vector<std::vector<Var>>& preds, const NeighborhoodIndex* index,
                 const LossReport& frozen) {
  if (static_cast<int>(preds.size()) != truth.rows) fail_arg("loss_on_tape: row mismatch");
  auto pred = [&](int j, int c) { return preds[j][c]; };
  if (kind.locality == Locality::Global) {
    if (kind.family == LossFamily::Mmd && frozen.mmd_beta.empty())
      fail_arg("loss_on_tape: frozen mmd bandwidth missing");
    const auto members = all_indices(truth.rows);
    const CouplingPlan* plan = frozen.couplings.empty() ? nullptr : &frozen.couplings[0];
    double beta = frozen.mmd_beta.empty() ? 0.0 : frozen.mmd_beta[0];
    return anchor_term_on_tape(tape, kind, truth, members, pred, plan, beta);
  }
  if (!index) fail_arg("loss_on_tape: local kind requires an index");
  const int A = index->anchor_count();
  if (kind.family == LossFamily::W2 && static_cast<int>(frozen.couplings.size()) != A)
    fail_arg("loss_on_tape: frozen couplings do not match the index");
  if (kind.family == LossFamily::Mmd && static_cast<int>(frozen.mmd_beta.size()) != A)
    fail_arg("loss_on_tape: frozen mmd bandwidths do not match the index");
  Var acc = make_var(tape, 0.0);
  for (int a = 0; a < A; ++a) {
    const CouplingPlan* plan =
        kind.family == LossFamily::W2 ? &frozen.couplings[a] : nullptr;
    double beta = kind.family == LossFamily::Mmd ? frozen.mmd_beta[a] : 0.0;
    acc = acc + anchor_term_on_tape(tape, kind, truth, index->members[a], pred, plan, beta);
  }
  return acc * (1.0 / A);
}

Matrix loss_prediction_gradient(const LossKind& kind, const Matrix& truth, const Matrix& preds,
                                const NeighborhoodIndex* index, const LossReport& frozen) {
  check_tables(truth, preds);
  check_index(index, kind, truth.rows);
  Matrix seeds(preds.rows, preds.cols);

  struct Group {
    const std::vector<int>* members;
    int representative;
    int count;
  };
  std::vector<Group> groups;
  std::vector<int> own;  // storage for the global pseudo-anchor
  double inv_anchors = 1.0;
  if (kind.locality == Locality::Global) {
    own = all_indices(truth.rows);
    groups.push_back({&own, 0, 1});
  } else {
    std::map<std::vector<int>, int> seen;  // members -> group slot
    for (int a = 0; a < index->anchor_count(); ++a) {
      auto [it, fresh] = seen.try_emplace(index->members[a], static_cast<int>(groups.size()));
      if (fresh)
        groups.push_back({&index->members[a], a, 1});
      else
        groups[it->second].count += 1;
    }
    inv_anchors = 1.0 / index->anchor_count();
  }

  Tape tape;
  for (const auto& g : groups) {
    tape.clear();
    const auto& members = *g.members;
    // leaves for every member prediction component
    std::map<int, std::vector<Var>> leaves;
    for (int j : members) {
      if (leaves.count(j)) continue;
      std::vector<Var> row;
      row.reserve(preds.cols);
      for (int c = 0; c < preds.cols; ++c) row.push_back(make_var(tape, preds.at(j, c)));
      leaves.emplace(j, std::move(row));
    }
    auto pred = [&](int j, int c) { return leaves.at(j)[c]; };
    const CouplingPlan* plan =
        kind.family == LossFamily::W2 ? &frozen.couplings[g.representative] : nullptr;
    double beta = kind.family == LossFamily::Mmd ? frozen.mmd_beta[g.representative] : 0.0;
    Var term = anchor_term_on_tape(tape, kind, truth, members, pred, plan, beta);
    tape.backward(term.i);
    const double w = g.count * inv_anchors;
    for (const auto& [j, row] : leaves)
      for (int c = 0; c < preds.cols; ++c) seeds.at(j, c) += w * tape.adjoint(row[c].i);
  }
  return seeds;
}

}  // namespace lw2
