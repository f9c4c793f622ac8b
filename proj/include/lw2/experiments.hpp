#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "lw2/datasets.hpp"
#include "lw2/losses.hpp"
#include "lw2/metrics.hpp"
#include "lw2/models.hpp"
#include "lw2/ode.hpp"
#include "lw2/optim.hpp"

namespace lw2 {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Runs fn(0..repeats-1), possibly on several threads; each slot owns its
// output so results are independent of scheduling.
void parallel_runs(int repeats, int threads, const std::function<void(int)>& fn);

// ---------------------------------------------------------------------------
// Linear regression with Gaussian coefficients
// ---------------------------------------------------------------------------

struct LinregOptions {
  int n = 1000;
  double delta = 0.1;
  bool hetero_norm = true;
  LossKind loss{LossFamily::W2, Locality::Local};
  int epochs = 1000;
  double lr = 0.02;
  double weight_decay = 0.005;
  uint64_t seed = 1;
  int repeats = 5;
  int threads = 0;  // 0: one thread per run up to the hardware count
};

struct LinregRun {
  uint64_t seed = 0;
  double error_b = 0;
  double error_sigma = 0;
  std::vector<double> trace;
  LinearGaussianParams estimate;
};

struct LinregResult {
  LinearGaussianParams truth;
  std::vector<LinregRun> runs;  // ordered by seed
  double median_error_b = 0;
  double median_error_sigma = 0;
};

LinregResult run_linreg(const LinregOptions& opt);

// ---------------------------------------------------------------------------
// Weight-uncertain MLP on the scalar saturation model
// ---------------------------------------------------------------------------

struct NnReconOptions {
  int n = 2000;
  double delta = 0.025;
  int width = 50;
  int depth = 4;
  bool resnet = true;
  bool hetero_norm = false;  // scalar input; plain distance by default
  LossKind loss{LossFamily::W2, Locality::Local};
  int epochs = 1000;
  double lr = 0.025;
  double weight_decay = 0.005;
  uint64_t seed = 1;
  int repeats = 5;
  int threads = 0;
  int test_samples_per_anchor = 100;
  // latent and input law overrides (isotropic latent SD; input half-width)
  std::optional<double> omega_sd;
  double x_halfwidth = 0.5;
  bool deterministic = false;  // freeze spreads at zero (plain network)
};

struct NnReconRun {
  uint64_t seed = 0;
  double mean_error = 0;
  double sd_error = 0;
  std::vector<double> trace;
};

struct NnReconResult {
  std::vector<NnReconRun> runs;
  double median_mean_error = 0;
  double median_sd_error = 0;
};

NnReconResult run_nn_recon(const NnReconOptions& opt);

// ---------------------------------------------------------------------------
// Concrete compressive strength (external CSV)
// ---------------------------------------------------------------------------

struct ConcreteOptions {
  std::string data_path;
  std::vector<std::string> input_columns{"cement",           "fly_ash",
                                         "water",            "superplasticizer",
                                         "coarse_aggregate", "fine_aggregate"};
  std::string output_column = "strength";
  double delta = 0.05;
  double delta0 = 0.2;
  int min_count = 5;
  int width = 50;
  int depth = 4;
  bool resnet = true;
  LossKind loss{LossFamily::W2, Locality::Local};
  int epochs = 1000;
  double lr = 0.02;
  double weight_decay = 0.005;
  uint64_t seed = 1;
  int repeats = 5;
  int threads = 0;
  bool deterministic = false;
};

struct ConcreteRun {
  uint64_t seed = 0;
  double mean_error = 0;
  double sd_error = 0;
  int anchors_used = 0;
  std::vector<double> trace;
};

struct ConcreteResult {
  int train_rows = 0, test_rows = 0;
  std::vector<ConcreteRun> runs;
  double median_mean_error = 0;
  double median_sd_error = 0;
};

ConcreteResult run_concrete(const ConcreteOptions& opt);

// ---------------------------------------------------------------------------
// ODE reconstruction
// ---------------------------------------------------------------------------

struct OdeOptions {
  double init_sd = 0.0;          // a
  double sigma_u = 0.25;         // latent half-width
  int m = 100;                   // grid steps
  int trajectories = 100;
  int width = 100;
  int depth = 2;
  bool resnet = false;
  double delta = 0.1;
  double delta0 = 0.1;
  int epochs = 500;
  double lr = 0.005;
  double weight_decay = 0.005;
  uint64_t seed = 1;
  int repeats = 5;
  int threads = 0;
  int g_budget = 0;  // 0: skip the field error
};

struct OdeRun {
  uint64_t seed = 0;
  double error_in_yhat = 0;
  std::optional<double> error_in_ghat;
  std::vector<double> per_slice_normalized;
  std::vector<double> trace;
  std::vector<Trajectory> truth_test, model_test;
};

struct OdeResult {
  std::vector<OdeRun> runs;
  double median_error_in_yhat = 0;
};

OdeResult run_ode(const OdeOptions& opt);

// ---------------------------------------------------------------------------
// Sweeps
// ---------------------------------------------------------------------------

struct SweepPoint {
  double x = 0;                  // the swept value
  std::string label;
  double median_error_b = 0;     // linreg sweeps
  double median_error_sigma = 0;
  double median_mean_error = 0;  // architecture sweep
  double median_sd_error = 0;
};

std::vector<SweepPoint> run_sweep_delta(const LinregOptions& base,
                                        const std::vector<double>& deltas);
std::vector<SweepPoint> run_sweep_n(const LinregOptions& base, const std::vector<int>& ns);

struct ArchSpec {
  int width = 50;
  int depth = 2;
  bool resnet = true;
};
std::vector<SweepPoint> run_sweep_arch(const NnReconOptions& base,
                                       const std::vector<ArchSpec>& archs);

std::vector<SweepPoint> run_bench_loss(const NnReconOptions& base,
                                       const std::vector<LossKind>& kinds);

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

struct ExperimentReport {
  std::string experiment;
  nlohmann::ordered_json config;   // every default resolved
  nlohmann::ordered_json metrics;
  std::vector<std::pair<std::string, std::string>> traces;  // filename -> csv body
  double wall_clock_sec = 0;
};

// Writes report.json, config.resolved.txt and traces/*.csv under out_dir.
// Refuses to reuse an existing directory unless force is set. Everything but
// the wall_clock field is byte-reproducible.
void emit_report(const ExperimentReport& report, const std::string& out_dir, bool force);

// ---------------------------------------------------------------------------
// Verification batteries: oracles, gradients, bounds
// ---------------------------------------------------------------------------

// Returns the number of failed checks (0 = pass) and prints one line per
// check. inject_fault corrupts one solver result on purpose so the battery
// itself can be shown to catch it.
int verify_suite(const std::string& which, bool inject_fault = false);

}  // namespace lw2
