#include "lw2/ode.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "lw2/neighborhoods.hpp"
#include "lw2/norms.hpp"
#include "lw2/optim.hpp"
#include "lw2/transport.hpp"

namespace lw2 {

void OdeExperimentConfig::validate() const {
  if (horizon <= 0) fail_arg("OdeExperimentConfig: horizon must be > 0");
  if (steps < 1) fail_arg("OdeExperimentConfig: steps must be >= 1");
  if (init_sd < 0) fail_arg("OdeExperimentConfig: init_sd must be >= 0");
  if (latent_halfwidth < 0) fail_arg("OdeExperimentConfig: latent_halfwidth must be >= 0");
  if (trajectories < 1) fail_arg("OdeExperimentConfig: trajectories must be >= 1");
  if (dim < 1) fail_arg("OdeExperimentConfig: dim must be >= 1");
}

std::array<double, 4> ground_truth_rhs(const std::array<double, 4>& y, double omega) {
  for (double v : y)
    if (!std::isfinite(v)) fail_arg("ground_truth_rhs: non-finite state");
  if (!std::isfinite(omega)) fail_arg("ground_truth_rhs: non-finite latent");
  const double w2 = 1.0 - omega * omega;
  return {(0.05 + omega) * y[0] + 0.05 * y[2] - w2 * y[1],
          w2 * y[0] + 0.05 * y[3],
          (-0.05 + omega) * y[2] - w2 * y[3],
          w2 * y[2]};
}

Trajectory integrate_rk4(const OdeRhs& rhs, std::span<const double> y0,
                         const OdeExperimentConfig& config, double latent) {
  config.validate();
  const int d = static_cast<int>(y0.size());
  const int m = config.steps;
  const double h = config.dt();
  Trajectory tr;
  tr.y0.assign(y0.begin(), y0.end());
  tr.latent = latent;
  tr.states = Matrix(m + 1, d);
  std::vector<double> y(y0.begin(), y0.end());
  std::vector<double> k1(d), k2(d), k3(d), k4(d), u(d);
  for (int c = 0; c < d; ++c) tr.states.at(0, c) = y[c];
  for (int n = 0; n < m; ++n) {
    const double t = n * h;
    rhs(y, t, k1);
    for (int c = 0; c < d; ++c) u[c] = y[c] + 0.5 * h * k1[c];
    rhs(u, t + 0.5 * h, k2);
    for (int c = 0; c < d; ++c) u[c] = y[c] + 0.5 * h * k2[c];
    rhs(u, t + 0.5 * h, k3);
    for (int c = 0; c < d; ++c) u[c] = y[c] + h * k3[c];
    rhs(u, t + h, k4);
    for (int c = 0; c < d; ++c) y[c] += (h / 6.0) * (k1[c] + 2.0 * k2[c] + 2.0 * k3[c] + k4[c]);
    if (!all_finite(y)) fail("integrate_rk4: state blew up at step " + std::to_string(n + 1));
    for (int c = 0; c < d; ++c) tr.states.at(n + 1, c) = y[c];
  }
  return tr;
}

std::vector<Trajectory> simulate_dataset(const OdeExperimentConfig& config, Rng& rng) {
  config.validate();
  if (config.dim != 4) fail_arg("simulate_dataset: the ground truth system is 4-dimensional");
  std::vector<Trajectory> out;
  out.reserve(config.trajectories);
  for (int j = 0; j < config.trajectories; ++j) {
    std::vector<double> y0(4);
    for (auto& v : y0) v = rng.normal(1.0, config.init_sd);
    double omega = rng.uniform(-config.latent_halfwidth, config.latent_halfwidth);
    OdeRhs rhs = [omega](std::span<const double> y, double, std::span<double> dy) {
      auto g = ground_truth_rhs({y[0], y[1], y[2], y[3]}, omega);
      std::copy(g.begin(), g.end(), dy.begin());
    };
    out.push_back(integrate_rk4(rhs, y0, config, omega));
  }
  return out;
}

namespace {

void check_aligned(const std::vector<Trajectory>& truth, const std::vector<Trajectory>& model) {
  if (truth.empty() || truth.size() != model.size())
    fail_arg("ode: trajectory sets must be nonempty and equally sized");
  const int g = truth.front().grid_points();
  const int d = truth.front().states.cols;
  for (size_t j = 0; j < truth.size(); ++j)
    if (truth[j].grid_points() != g || model[j].grid_points() != g ||
        truth[j].states.cols != d || model[j].states.cols != d)
      fail_arg("ode: trajectory grids do not match");
}

Matrix slice_matrix(const std::vector<Trajectory>& trajs, int slice) {
  const int d = trajs.front().states.cols;
  Matrix m(static_cast<int>(trajs.size()), d);
  for (size_t j = 0; j < trajs.size(); ++j)
    for (int c = 0; c < d; ++c) m.at(static_cast<int>(j), c) = trajs[j].states.at(slice, c);
  return m;
}

NeighborhoodIndex y0_index(const std::vector<Trajectory>& truth, double delta) {
  std::vector<std::vector<double>> y0s;
  y0s.reserve(truth.size());
  for (const auto& t : truth) y0s.push_back(t.y0);
  return build_index(y0s, InputNorm::homogeneous(), delta);
}

}  // namespace

SliceLoss time_avg_local_w2(const std::vector<Trajectory>& truth,
                            const std::vector<Trajectory>& model, double delta) {
  check_aligned(truth, model);
  NeighborhoodIndex index = y0_index(truth, delta);
  SliceLoss out;
  const int grid = truth.front().grid_points();
  out.per_slice.resize(grid);
  for (int i = 0; i < grid; ++i) {
    LossReport rep = local_w2_loss(slice_matrix(truth, i), slice_matrix(model, i), index);
    out.per_slice[i] = rep.value;
    out.value += rep.value;
  }
  out.value /= grid;
  return out;
}

OdeErrors ode_errors(const std::vector<Trajectory>& truth, const std::vector<Trajectory>& model,
                     double delta0, double horizon, const LatentRhsSampler* truth_g,
                     const LatentRhsSampler* model_g, int g_budget, Rng* rng) {
  check_aligned(truth, model);
  if (delta0 <= 0) fail_arg("ode_errors: delta0 must be > 0");
  if (horizon <= 0) fail_arg("ode_errors: horizon must be > 0");
  NeighborhoodIndex index = y0_index(truth, delta0);
  const int grid = truth.front().grid_points();
  const int d = truth.front().states.cols;
  const int N = static_cast<int>(truth.size());

  // trapezoid weights on the uniform grid (the common factor dt cancels in
  // every ratio below)
  auto tw = [&](int i) { return (i == 0 || i == grid - 1) ? 0.5 : 1.0; };

  OdeErrors out;
  out.per_slice_normalized.resize(grid);
  double num = 0, den = 0;
  Matrix zeros(N, d);
  for (int i = 0; i < grid; ++i) {
    Matrix ts = slice_matrix(truth, i);
    Matrix ms = slice_matrix(model, i);
    double w2 = local_w2_loss(ts, ms, index).value;
    double w2_zero = local_w2_loss(ts, zeros, index).value;
    num += tw(i) * w2;
    den += tw(i) * w2_zero;
    double msq = 0;
    for (int j = 0; j < N; ++j) msq += squared_distance(ts.row(j), zeros.row(0), d);
    msq /= N;
    out.per_slice_normalized[i] = msq > 0 ? w2 / msq : 0.0;
  }
  if (den == 0) fail_arg("ode_errors: zero denominator in the trajectory error");
  out.error_in_yhat = num / den;

  if (truth_g && model_g) {
    if (g_budget < 2) fail_arg("ode_errors: g_budget must be >= 2");
    if (!rng) fail_arg("ode_errors: field error needs an rng");
    double gnum = 0, gden = 0;
    std::vector<double> g(d);
    for (int i = 0; i < grid; ++i) {
      const double t = grid > 1 ? horizon * i / (grid - 1) : 0.0;
      double mean_w2 = 0, mean_g2 = 0;
      for (int j = 0; j < N; ++j) {
        std::span<const double> y(truth[j].states.row(i), static_cast<size_t>(d));
        Matrix gt(g_budget, d), gm(g_budget, d);
        for (int b = 0; b < g_budget; ++b) {
          (*truth_g)(y, t, *rng, g);
          for (int c = 0; c < d; ++c) gt.at(b, c) = g[c];
          mean_g2 += squared_distance(g.data(), zeros.row(0), d);
          (*model_g)(y, t, *rng, g);
          for (int c = 0; c < d; ++c) gm.at(b, c) = g[c];
        }
        mean_w2 += w2sq_assignment(PointCloud(d, gt.a), PointCloud(d, gm.a)).cost;
      }
      gnum += tw(i) * mean_w2 / N;
      gden += tw(i) * mean_g2 / (static_cast<double>(N) * g_budget);
    }
    if (gden == 0) fail_arg("ode_errors: zero denominator in the field error");
    out.error_in_ghat = gnum / gden;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unrolled trainer
// ---------------------------------------------------------------------------

void NeuralOdeTrainConfig::validate() const {
  if (epochs < 0) fail_arg("NeuralOdeTrainConfig: epochs must be >= 0");
  if (lr <= 0) fail_arg("NeuralOdeTrainConfig: lr must be > 0");
  if (weight_decay < 0) fail_arg("NeuralOdeTrainConfig: weight_decay must be >= 0");
  if (delta <= 0) fail_arg("NeuralOdeTrainConfig: delta must be > 0");
}

namespace {

// Forward pass of one trajectory with every stage cache retained for the
// reverse sweep.
struct UnrolledTrajectory {
  Matrix states;                               // (m+1) x d
  std::vector<std::array<SampledMlp::Cache, 4>> caches;  // per step
  std::vector<Matrix> stage_k;                 // per step, 4 x d
};

UnrolledTrajectory unroll_forward(const SampledMlp& f, std::span<const double> y0,
                                  const OdeExperimentConfig& config) {
  const int d = static_cast<int>(y0.size());
  const int m = config.steps;
  const double h = config.dt();
  UnrolledTrajectory ut;
  ut.states = Matrix(m + 1, d);
  ut.caches.resize(m);
  ut.stage_k.assign(m, Matrix(4, d));
  std::vector<double> y(y0.begin(), y0.end()), u(d);
  for (int c = 0; c < d; ++c) ut.states.at(0, c) = y[c];
  for (int n = 0; n < m; ++n) {
    auto& K = ut.stage_k[n];
    auto& C = ut.caches[n];
    f.forward_cached(y, {K.row(0), static_cast<size_t>(d)}, C[0]);
    for (int c = 0; c < d; ++c) u[c] = y[c] + 0.5 * h * K.at(0, c);
    f.forward_cached(u, {K.row(1), static_cast<size_t>(d)}, C[1]);
    for (int c = 0; c < d; ++c) u[c] = y[c] + 0.5 * h * K.at(1, c);
    f.forward_cached(u, {K.row(2), static_cast<size_t>(d)}, C[2]);
    for (int c = 0; c < d; ++c) u[c] = y[c] + h * K.at(2, c);
    f.forward_cached(u, {K.row(3), static_cast<size_t>(d)}, C[3]);
    for (int c = 0; c < d; ++c)
      y[c] += (h / 6.0) * (K.at(0, c) + 2.0 * K.at(1, c) + 2.0 * K.at(2, c) + K.at(3, c));
    if (!all_finite(y)) fail("train_neural_ode: state blew up at step " + std::to_string(n + 1));
    for (int c = 0; c < d; ++c) ut.states.at(n + 1, c) = y[c];
  }
  return ut;
}

// Reverse sweep over one trajectory. seeds is (m+1) x d; adds into Wbar/bbar.
void unroll_backward(const SampledMlp& f, const UnrolledTrajectory& ut, const Matrix& seeds,
                     const OdeExperimentConfig& config, std::vector<Matrix>& Wbar,
                     std::vector<std::vector<double>>& bbar) {
  const int d = ut.states.cols;
  const int m = config.steps;
  const double h = config.dt();
  std::vector<double> ybar(seeds.row(m), seeds.row(m) + d);
  std::vector<double> k1b(d), k2b(d), k3b(d), k4b(d), ub(d);
  for (int n = m - 1; n >= 0; --n) {
    const auto& C = ut.caches[n];
    std::vector<double> ynb(d);  // adjoint of y_n from this step
    for (int c = 0; c < d; ++c) {
      double g = ybar[c];
      ynb[c] = g;
      k1b[c] = (h / 6.0) * g;
      k2b[c] = (h / 3.0) * g;
      k3b[c] = (h / 3.0) * g;
      k4b[c] = (h / 6.0) * g;
    }
    // k4 = f(y_n + h k3)
    f.vjp(C[3], k4b, ub, Wbar, bbar);
    for (int c = 0; c < d; ++c) {
      ynb[c] += ub[c];
      k3b[c] += h * ub[c];
    }
    // k3 = f(y_n + h/2 k2)
    f.vjp(C[2], k3b, ub, Wbar, bbar);
    for (int c = 0; c < d; ++c) {
      ynb[c] += ub[c];
      k2b[c] += 0.5 * h * ub[c];
    }
    // k2 = f(y_n + h/2 k1)
    f.vjp(C[1], k2b, ub, Wbar, bbar);
    for (int c = 0; c < d; ++c) {
      ynb[c] += ub[c];
      k1b[c] += 0.5 * h * ub[c];
    }
    // k1 = f(y_n)
    f.vjp(C[0], k1b, ub, Wbar, bbar);
    for (int c = 0; c < d; ++c) ynb[c] += ub[c];
    for (int c = 0; c < d; ++c) ybar[c] = ynb[c] + seeds.at(n, c);
  }
}

}  // namespace

double neural_ode_loss_and_gradient(const StochasticMlpModel& model, ParamVector& params,
                                    const std::vector<Trajectory>& truth,
                                    const OdeExperimentConfig& config, double delta,
                                    const Matrix& eps_all) {
  config.validate();
  const int N = static_cast<int>(truth.size());
  const int d = config.dim;
  const int m = config.steps;
  if (model.input_dim() != d || model.output_dim() != d)
    fail_arg("neural_ode: model dimensions must match the state");
  if (eps_all.rows != N || eps_all.cols != model.noise_dim())
    fail_arg("neural_ode: noise table mismatch");

  // forward all trajectories with this epoch's weights
  std::vector<SampledMlp> nets;
  std::vector<UnrolledTrajectory> rolls;
  nets.reserve(N);
  rolls.reserve(N);
  for (int j = 0; j < N; ++j) {
    nets.push_back(SampledMlp::sample(model.shape(), params.values, eps_all.row_span(j)));
    rolls.push_back(unroll_forward(nets[j], truth[j].y0, config));
  }

  // per-slice local W2 and its prediction seeds
  NeighborhoodIndex index = y0_index(truth, delta);
  const int grid = m + 1;
  double value = 0;
  std::vector<Matrix> seeds(N, Matrix(grid, d));  // per trajectory
  for (int i = 0; i < grid; ++i) {
    Matrix ts = slice_matrix(truth, i);
    Matrix ms(N, d);
    for (int j = 0; j < N; ++j)
      for (int c = 0; c < d; ++c) ms.at(j, c) = rolls[j].states.at(i, c);
    LossKind kind{LossFamily::W2, Locality::Local};
    LossReport rep = evaluate_loss(kind, ts, ms, &index);
    value += rep.value;
    Matrix sg = loss_prediction_gradient(kind, ts, ms, &index, rep);
    for (int j = 0; j < N; ++j)
      for (int c = 0; c < d; ++c) seeds[j].at(i, c) = sg.at(j, c) / grid;
  }
  value /= grid;
  if (!std::isfinite(value)) fail("neural_ode: non-finite loss");

  // reverse sweeps, then map sampled-weight adjoints onto means and spreads
  params.zero_grad();
  const MlpLayout& layout = model.layout();
  const int maps = static_cast<int>(layout.layers.size());
  std::vector<Matrix> Wbar;
  std::vector<std::vector<double>> bbar;
  for (const auto& lay : layout.layers) {
    Wbar.emplace_back(lay.rows, lay.cols);
    bbar.emplace_back(lay.rows, 0.0);
  }
  for (int j = 0; j < N; ++j) {
    for (auto& w : Wbar) std::fill(w.a.begin(), w.a.end(), 0.0);
    for (auto& b : bbar) std::fill(b.begin(), b.end(), 0.0);
    unroll_backward(nets[j], rolls[j], seeds[j], config, Wbar, bbar);
    for (int l = 0; l < maps; ++l) {
      const auto& lay = layout.layers[l];
      for (int w = 0; w < lay.rows * lay.cols; ++w) {
        const double g = Wbar[l].a[w];
        if (g == 0.0) continue;
        params.grad[lay.a_off + w] += g;
        const double s = params.values[lay.s_off + w];
        const double sign = s > 0 ? 1.0 : (s < 0 ? -1.0 : 0.0);
        params.grad[lay.s_off + w] += g * eps_all.at(j, lay.eps_off + w) * sign;
      }
      for (int r = 0; r < lay.rows; ++r) params.grad[lay.b_off + r] += bbar[l][r];
    }
  }
  return value;
}

NeuralOdeResult train_neural_ode(const StochasticMlpModel& model,
                                 const std::vector<Trajectory>& truth,
                                 const OdeExperimentConfig& config,
                                 const NeuralOdeTrainConfig& cfg) {
  cfg.validate();
  config.validate();
  if (truth.empty()) fail_arg("train_neural_ode: no trajectories");

  NeuralOdeResult out;
  Rng init_rng = Rng(cfg.seed).fork(0x696e6974);
  out.params = model.init_params(init_rng);
  out.trace.reserve(cfg.epochs);
  AdamWState st = AdamWState::create(out.params.size(), cfg.lr, cfg.weight_decay);
  Rng noise_rng = Rng(cfg.seed).fork(0x6e6f6973);

  const int N = static_cast<int>(truth.size());
  Matrix eps_all(N, model.noise_dim());
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (int j = 0; j < N; ++j)
      for (int c = 0; c < eps_all.cols; ++c) eps_all.at(j, c) = noise_rng.normal();
    double value;
    try {
      value = neural_ode_loss_and_gradient(model, out.params, truth, config, cfg.delta, eps_all);
    } catch (const std::exception& e) {
      fail("train_neural_ode: aborted at epoch " + std::to_string(epoch) + ": " + e.what());
    }
    adamw_step(out.params, st);
    out.trace.push_back(value);
  }
  return out;
}

std::vector<Trajectory> simulate_model(const StochasticMlpModel& model,
                                       std::span<const double> params,
                                       const std::vector<std::vector<double>>& y0s,
                                       const OdeExperimentConfig& config, Rng& rng) {
  config.validate();
  std::vector<Trajectory> out;
  out.reserve(y0s.size());
  for (const auto& y0 : y0s) {
    std::vector<double> eps(model.noise_dim());
    for (auto& e : eps) e = rng.normal();
    SampledMlp net = SampledMlp::sample(model.shape(), params, eps);
    OdeRhs rhs = [&net](std::span<const double> y, double, std::span<double> dy) {
      net.forward(y, dy);
    };
    out.push_back(integrate_rk4(rhs, y0, config, 0.0));
  }
  return out;
}

void write_trajectories_csv(const std::vector<Trajectory>& trajs,
                            const OdeExperimentConfig& config, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail("write_trajectories_csv: cannot open " + path);
  const int d = trajs.empty() ? 0 : trajs.front().states.cols;
  out << "traj_id,t";
  for (int c = 0; c < d; ++c) out << ",y" << (c + 1);
  out << '\n';
  char buf[64];
  for (size_t j = 0; j < trajs.size(); ++j) {
    for (int i = 0; i < trajs[j].grid_points(); ++i) {
      out << j << ',';
      std::snprintf(buf, sizeof buf, "%.17g", i * config.dt());
      out << buf;
      for (int c = 0; c < d; ++c) {
        std::snprintf(buf, sizeof buf, "%.17g", trajs[j].states.at(i, c));
        out << ',' << buf;
      }
      out << '\n';
    }
  }
}

}  // namespace lw2
