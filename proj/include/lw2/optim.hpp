#pragma once

#include <string>
#include <vector>

#include "lw2/datasets.hpp"
#include "lw2/losses.hpp"
#include "lw2/models.hpp"
#include "lw2/neighborhoods.hpp"

namespace lw2 {

// Adam with decoupled weight decay.
struct AdamWState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  long t = 0;
  std::vector<double> m, v;

  static AdamWState create(int n, double lr, double weight_decay);
};

void adamw_step(ParamVector& params, AdamWState& state);

struct TrainConfig {
  int epochs = 1000;
  double lr = 0.02;
  double weight_decay = 0.005;
  double delta = 0.1;
  LossKind loss{LossFamily::W2, Locality::Local};
  uint64_t seed = 1;
  int repeats = 1;
  void validate() const;
};

struct TrainResult {
  ParamVector params;
  std::vector<double> trace;  // loss per epoch
};

// Full-batch training: per epoch every sample gets a fresh noise draw, the
// loss is evaluated at the observed inputs and its gradient flows through the
// frozen per-epoch couplings. Deterministic given (seed, config, data).
TrainResult train(const StochasticModel& model, ParamVector initial, const SampleSet& data,
                  const NeighborhoodIndex* index, const TrainConfig& cfg);

void write_trace_csv(const std::vector<double>& trace, const std::string& path);

// One epoch's loss value and parameter gradient for frozen noise; the
// building block of train(), exposed for gradient verification.
double loss_and_gradient(const StochasticModel& model, ParamVector& params,
                         const SampleSet& data, const NeighborhoodIndex* index,
                         const LossKind& kind, const Matrix& eps_all);

}  // namespace lw2
