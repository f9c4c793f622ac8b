#pragma once

#include <array>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "lw2/losses.hpp"
#include "lw2/models.hpp"
#include "lw2/rng.hpp"
#include "lw2/util.hpp"

namespace lw2 {

struct OdeExperimentConfig {
  double horizon = 2.0;
  int steps = 100;              // grid t_i = i * dt, i = 0..steps
  double init_sd = 0.0;         // y0 ~ N(1, init_sd^2 I)
  double latent_halfwidth = 0.25;  // omega ~ U(-w, w)
  int trajectories = 100;
  int dim = 4;

  double dt() const { return horizon / steps; }
  void validate() const;
};

struct Trajectory {
  std::vector<double> y0;
  double latent = 0;
  Matrix states;  // (steps+1) x dim

  int grid_points() const { return states.rows; }
};

// Right-hand side of the 4-state linear system with one latent parameter.
std::array<double, 4> ground_truth_rhs(const std::array<double, 4>& y, double omega);

using OdeRhs = std::function<void(std::span<const double> y, double t, std::span<double> dy)>;

// Classical fixed-step RK4 on the config grid.
Trajectory integrate_rk4(const OdeRhs& rhs, std::span<const double> y0,
                         const OdeExperimentConfig& config, double latent);

// Independent (y0, omega) draws, each integrated through the ground truth.
std::vector<Trajectory> simulate_dataset(const OdeExperimentConfig& config, Rng& rng);

struct SliceLoss {
  double value = 0;                 // time-averaged local squared W2
  std::vector<double> per_slice;
};

// Mean over grid points of the local squared W2 between the two slice clouds;
// neighborhoods are Euclidean balls of radius delta around the truth initial
// conditions.
SliceLoss time_avg_local_w2(const std::vector<Trajectory>& truth,
                            const std::vector<Trajectory>& model, double delta);

using LatentRhsSampler =
    std::function<void(std::span<const double> y, double t, Rng& rng, std::span<double> g)>;

struct OdeErrors {
  double error_in_yhat = 0;
  std::optional<double> error_in_ghat;
  std::vector<double> per_slice_normalized;  // slice W2 / mean ||y||^2
};

// Trajectory- and field-level errors. The field error is computed only when
// both samplers are provided; it draws g_budget latents per evaluation point.
OdeErrors ode_errors(const std::vector<Trajectory>& truth, const std::vector<Trajectory>& model,
                     double delta0, double horizon, const LatentRhsSampler* truth_g,
                     const LatentRhsSampler* model_g, int g_budget, Rng* rng);

struct NeuralOdeTrainConfig {
  int epochs = 500;
  double lr = 0.005;
  double weight_decay = 0.005;
  double delta = 0.1;
  uint64_t seed = 1;
  void validate() const;
};

struct NeuralOdeResult {
  ParamVector params;
  std::vector<double> trace;
};

// Trains the weight-uncertain MLP as a time-homogeneous right-hand side by
// unrolling RK4 and backpropagating through the whole grid. One noise draw
// per trajectory per epoch; couplings are frozen per epoch.
NeuralOdeResult train_neural_ode(const StochasticMlpModel& model,
                                 const std::vector<Trajectory>& truth,
                                 const OdeExperimentConfig& config,
                                 const NeuralOdeTrainConfig& cfg);

// Integrates the trained stochastic RHS from the given initial conditions,
// one fresh weight draw per trajectory.
std::vector<Trajectory> simulate_model(const StochasticMlpModel& model,
                                       std::span<const double> params,
                                       const std::vector<std::vector<double>>& y0s,
                                       const OdeExperimentConfig& config, Rng& rng);

// Loss value and parameter gradient of the unrolled objective for one frozen
// noise table (a row per trajectory); exposed for finite-difference checks.
double neural_ode_loss_and_gradient(const StochasticMlpModel& model,
                                    ParamVector& params,
                                    const std::vector<Trajectory>& truth,
                                    const OdeExperimentConfig& config, double delta,
                                    const Matrix& eps_all);

void write_trajectories_csv(const std::vector<Trajectory>& trajs,
                            const OdeExperimentConfig& config, const std::string& path);

}  // namespace lw2
