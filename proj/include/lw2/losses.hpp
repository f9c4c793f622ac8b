#pragma once

#include <string>
#include <vector>

#include "lw2/neighborhoods.hpp"
#include "lw2/tape.hpp"
#include "lw2/transport.hpp"
#include "lw2/util.hpp"

namespace lw2 {

enum class LossFamily { W2, Mmd, Mse, Mean2Var };
enum class Locality { Local, Global };

struct LossKind {
  LossFamily family = LossFamily::W2;
  Locality locality = Locality::Local;
};

LossFamily parse_loss_family(const std::string& s);
std::string to_string(const LossKind& k);

struct LossReport {
  double value = 0;
  std::vector<double> per_anchor;        // local kinds
  std::vector<CouplingPlan> couplings;   // w2 kinds: per anchor (local) or single (global)
  std::vector<double> mmd_beta;          // mmd kinds: bandwidth base actually used
  bool clamped = false;                  // mmd rounding clamped at 0
};

// Truth and predictions are row-aligned N x d tables over the same inputs.
// Local kinds restrict both to each anchor's neighborhood and average the
// per-anchor statistic; global kinds see the full sets once.
LossReport evaluate_loss(const LossKind& kind, const Matrix& truth, const Matrix& preds,
                         const NeighborhoodIndex* index);

LossReport local_w2_loss(const Matrix& truth, const Matrix& preds,
                         const NeighborhoodIndex& index);
LossReport global_w2_loss(const Matrix& truth, const Matrix& preds);
LossReport baseline_loss(const LossKind& kind, const Matrix& truth, const Matrix& preds,
                         const NeighborhoodIndex* index);

// Rebuilds the loss as a tape expression over prediction Vars. Couplings and
// MMD bandwidths are the frozen ones from `frozen` (envelope treatment), so
// the expression is smooth and suitable for finite-difference comparison.
Var loss_on_tape(Tape& tape, const LossKind& kind, const Matrix& truth,
                 const std::vector<std::vector<Var>>& preds, const NeighborhoodIndex* index,
                 const LossReport& frozen);

// d(loss)/d(prediction), an N x d table; the W2 coupling and the MMD
// bandwidth are held fixed at the values recorded in `frozen`.
Matrix loss_prediction_gradient(const LossKind& kind, const Matrix& truth, const Matrix& preds,
                                const NeighborhoodIndex* index, const LossReport& frozen);

}  // namespace lw2
