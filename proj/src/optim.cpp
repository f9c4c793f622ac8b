#include "lw2/optim.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

namespace lw2 {

AdamWState AdamWState::create(int n, double lr, double weight_decay) {
  AdamWState st;
  st.lr = lr;
  st.weight_decay = weight_decay;
  st.m.assign(n, 0.0);
  st.v.assign(n, 0.0);
  return st;
}

void adamw_step(ParamVector& params, AdamWState& state) {
  const int n = params.size();
  if (static_cast<int>(state.m.size()) != n) fail_arg("adamw_step: state size mismatch");
  if (!all_finite(params.grad)) fail_arg("adamw_step: non-finite gradient");
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (int i = 0; i < n; ++i) {
    const double g = params.grad[i];
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g;
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g * g;
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    params.values[i] -=
        state.lr * (mhat / (std::sqrt(vhat) + state.eps) + state.weight_decay * params.values[i]);
  }
}

void TrainConfig::validate() const {
  if (epochs < 0) fail_arg("TrainConfig: epochs must be >= 0");
  if (lr <= 0) fail_arg("TrainConfig: lr must be > 0");
  if (weight_decay < 0) fail_arg("TrainConfig: weight_decay must be >= 0");
  if (delta <= 0) fail_arg("TrainConfig: delta must be > 0");
  if (repeats < 1) fail_arg("TrainConfig: repeats must be >= 1");
}

double loss_and_gradient(const StochasticModel& model, ParamVector& params,
                         const SampleSet& data, const NeighborhoodIndex* index,
                         const LossKind& kind, const Matrix& eps_all) {
  const int N = data.size();
  const int d = model.output_dim();
  if (eps_all.rows != N || eps_all.cols != model.noise_dim())
    fail_arg("loss_and_gradient: noise table mismatch");

  Matrix truth = data.output_matrix();
  Matrix preds(N, d);
  for (int k = 0; k < N; ++k)
    model.predict(params.values, data.inputs[k], eps_all.row_span(k),
                  {preds.row(k), static_cast<size_t>(d)});

  LossReport rep = evaluate_loss(kind, truth, preds, index);
  if (!std::isfinite(rep.value)) fail("loss_and_gradient: non-finite loss");
  Matrix seeds = loss_prediction_gradient(kind, truth, preds, index, rep);

  params.zero_grad();
  Tape tape;
  std::vector<Var> leaves(params.size());
  for (int k = 0; k < N; ++k) {
    bool live = false;
    for (int c = 0; c < d; ++c) live = live || seeds.at(k, c) != 0.0;
    if (!live) continue;
    tape.clear();
    for (int i = 0; i < params.size(); ++i) leaves[i] = make_var(tape, params.values[i]);
    auto y = model.predict_on_tape(tape, leaves, data.inputs[k], eps_all.row_span(k));
    Var root = y[0] * seeds.at(k, 0);
    for (int c = 1; c < d; ++c) root = root + y[c] * seeds.at(k, c);
    tape.backward(root.i);
    for (int i = 0; i < params.size(); ++i) params.grad[i] += tape.adjoint(leaves[i].i);
  }
  return rep.value;
}

TrainResult train(const StochasticModel& model, ParamVector initial, const SampleSet& data,
                  const NeighborhoodIndex* index, const TrainConfig& cfg) {
  cfg.validate();
  data.validate();
  initial.validate();
  if (initial.size() != model.param_count()) fail_arg("train: parameter count mismatch");
  if (data.input_dim() != model.input_dim() || data.output_dim() != model.output_dim())
    fail_arg("train: data dimensions do not match the model");
  if (cfg.loss.locality == Locality::Local) {
    if (!index) fail_arg("train: local loss requires an index");
    if (index->anchor_count() == 0) fail_arg("train: empty index");
  }

  TrainResult out;
  out.params = std::move(initial);
  out.trace.reserve(cfg.epochs);
  AdamWState st = AdamWState::create(out.params.size(), cfg.lr, cfg.weight_decay);
  Rng noise_rng = Rng(cfg.seed).fork(0x6e6f6973);  // noise stream

  const int N = data.size();
  Matrix eps_all(N, model.noise_dim());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int k = 0; k < N; ++k)
      for (int c = 0; c < eps_all.cols; ++c) eps_all.at(k, c) = noise_rng.normal();
    double value;
    try {
      value = loss_and_gradient(model, out.params, data, index, cfg.loss, eps_all);
    } catch (const std::exception& e) {
      fail("train: aborted at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    if (!std::isfinite(value)) fail("train: non-finite loss at epoch " + std::to_string(epoch));
    adamw_step(out.params, st);
    out.trace.push_back(value);
  }
  return out;
}

void write_trace_csv(const std::vector<double>& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("write_trace_csv: cannot open " + path);
  out << "epoch,loss\n";
  char buf[64];
  for (size_t i = 0; i < trace.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.17g", trace[i]);
    out << (i + 1) << ',' << buf << '\n';
  }
}

}  // namespace lw2
