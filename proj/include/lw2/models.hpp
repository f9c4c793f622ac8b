#pragma once

#include <memory>
#include <span>
#include <vector>

#include "lw2/rng.hpp"
#include "lw2/tape.hpp"
#include "lw2/util.hpp"

namespace lw2 {

// ---------------------------------------------------------------------------
// Linear model with Gaussian coefficients: y = sum_i (m_i + |s_i| e_i) x_i
// + (m_0 + |s_0| e_0). Spreads are stored raw and signed; |s| is the SD.
// ---------------------------------------------------------------------------

struct LinearGaussianParams {
  std::vector<double> mean;        // n+1 entries, index 0 is the intercept
  std::vector<double> spread_raw;  // n+1 entries, SD = |spread_raw|

  int n() const { return static_cast<int>(mean.size()) - 1; }
  void validate() const;
};

// ---------------------------------------------------------------------------
// Feed-forward MLP whose weights are independent Gaussians resampled per
// input; biases are deterministic. ReLU between hidden layers, linear output.
// In resnet mode an identity skip is added across each hidden layer after the
// first (activation applied first, then the skip).
// ---------------------------------------------------------------------------

struct MlpShape {
  int input_dim = 1;
  int output_dim = 1;
  int hidden_width = 50;
  int hidden_layers = 2;
  bool resnet = false;
  void validate() const;
};

// Flat offsets of the per-layer parameter blocks inside a ParamVector:
// for each linear map, weight means, then raw spreads, then biases.
struct MlpLayout {
  struct Layer {
    int rows = 0, cols = 0;
    int a_off = 0, s_off = 0, b_off = 0;  // into the parameter array
    int eps_off = 0;                      // into the noise array
  };
  std::vector<Layer> layers;
  int param_count = 0;
  int noise_count = 0;

  static MlpLayout from(const MlpShape& shape);
};

// Shared interface used by the trainer: a stochastic map x -> y driven by a
// frozen standard-normal draw (one entry per stochastic weight).
class StochasticModel {
 public:
  virtual ~StochasticModel() = default;
  virtual int input_dim() const = 0;
  virtual int output_dim() const = 0;
  virtual int noise_dim() const = 0;
  virtual int param_count() const = 0;
  virtual ParamVector init_params(Rng& rng) const = 0;
  virtual void predict(std::span<const double> params, std::span<const double> x,
                       std::span<const double> eps, std::span<double> y_out) const = 0;
  virtual std::vector<Var> predict_on_tape(Tape& tape, std::span<const Var> params,
                                           std::span<const double> x,
                                           std::span<const double> eps) const = 0;
};

class LinearGaussianModel final : public StochasticModel {
 public:
  explicit LinearGaussianModel(int n_inputs);
  int input_dim() const override { return n_; }
  int output_dim() const override { return 1; }
  int noise_dim() const override { return n_ + 1; }
  int param_count() const override { return 2 * (n_ + 1); }
  ParamVector init_params(Rng& rng) const override;  // all entries 1
  void predict(std::span<const double> params, std::span<const double> x,
               std::span<const double> eps, std::span<double> y_out) const override;
  std::vector<Var> predict_on_tape(Tape& tape, std::span<const Var> params,
                                   std::span<const double> x,
                                   std::span<const double> eps) const override;

  ParamVector pack(const LinearGaussianParams& p) const;
  LinearGaussianParams unpack(std::span<const double> params) const;

 private:
  int n_;
};

class StochasticMlpModel final : public StochasticModel {
 public:
  explicit StochasticMlpModel(const MlpShape& shape);
  const MlpShape& shape() const { return shape_; }
  const MlpLayout& layout() const { return layout_; }
  int input_dim() const override { return shape_.input_dim; }
  int output_dim() const override { return shape_.output_dim; }
  int noise_dim() const override { return layout_.noise_count; }
  int param_count() const override { return layout_.param_count; }
  ParamVector init_params(Rng& rng) const override;  // every entry ~ N(0, 1e-4)
  void predict(std::span<const double> params, std::span<const double> x,
               std::span<const double> eps, std::span<double> y_out) const override;
  std::vector<Var> predict_on_tape(Tape& tape, std::span<const Var> params,
                                   std::span<const double> x,
                                   std::span<const double> eps) const override;

 private:
  MlpShape shape_;
  MlpLayout layout_;
};

// Weights realized for one noise draw; dense storage with cached forward and
// vector-Jacobian product, for the unrolled integrator where the same draw is
// reused many times.
struct SampledMlp {
  const MlpShape* shape = nullptr;
  MlpLayout layout;
  std::vector<Matrix> W;                 // per linear map, rows x cols
  std::vector<std::vector<double>> b;

  static SampledMlp sample(const MlpShape& shape, std::span<const double> params,
                           std::span<const double> eps);

  void forward(std::span<const double> x, std::span<double> y) const;

  struct Cache {
    std::vector<std::vector<double>> input;  // per linear map, its input vector
    std::vector<std::vector<double>> pre;    // per linear map, pre-activation
  };
  void forward_cached(std::span<const double> x, std::span<double> y, Cache& c) const;

  // Accumulates into Wbar/bbar; writes the input adjoint to xbar.
  void vjp(const Cache& c, std::span<const double> ybar, std::span<double> xbar,
           std::vector<Matrix>& Wbar, std::vector<std::vector<double>>& bbar) const;
};

// Fresh standard-normal draw, one entry per stochastic weight.
std::vector<double> draw_noise(const StochasticModel& model, Rng& rng);

}  // namespace lw2
