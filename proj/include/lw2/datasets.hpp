#pragma once

#include <array>
#include <string>
#include <variant>
#include <vector>

#include "lw2/models.hpp"
#include "lw2/rng.hpp"
#include "lw2/util.hpp"

namespace lw2 {

// Observed input/output pairs; outputs may be vector-valued.
struct SampleSet {
  std::vector<std::vector<double>> inputs;
  std::vector<std::vector<double>> outputs;
  std::string provenance;

  int size() const { return static_cast<int>(inputs.size()); }
  int input_dim() const { return inputs.empty() ? 0 : static_cast<int>(inputs.front().size()); }
  int output_dim() const { return outputs.empty() ? 0 : static_cast<int>(outputs.front().size()); }
  void validate() const;

  // Flat N x d view of the outputs.
  Matrix output_matrix() const;
  std::vector<double> output_column() const;  // requires output_dim() == 1
};

// One coordinate's sampling law.
struct ScalarLaw {
  enum class Kind { Uniform, Normal, Exponential, Beta };
  Kind kind = Kind::Uniform;
  double p1 = 0, p2 = 1;

  static ScalarLaw uniform(double a, double b);
  static ScalarLaw normal(double mean, double sd);
  static ScalarLaw exponential(double rate);
  static ScalarLaw beta(double alpha, double beta);
  double draw(Rng& rng) const;
};

std::vector<std::vector<double>> sample_inputs(const std::vector<ScalarLaw>& laws, int count,
                                               Rng& rng);

// Ground-truth generators: linear with Gaussian coefficients, and the scalar
// saturation model y = w1 (1 - exp(-w2 x)) + 5 with correlated (w1, w2).
struct NonlinearExpTruth {
  std::array<double, 2> mean{};
  std::array<std::array<double, 2>, 2> cov{};
};

using GroundTruthSpec = std::variant<LinearGaussianParams, NonlinearExpTruth>;

// Draws one independent latent per sample and evaluates the model.
SampleSet sample_ground_truth(const GroundTruthSpec& spec,
                              const std::vector<std::vector<double>>& inputs, Rng& rng);

// Lower-triangular factor of a symmetric PSD matrix (throws otherwise).
std::vector<double> cholesky_factor(const std::vector<double>& sym, int n);

// ---------------------------------------------------------------------------
// CSV ingestion (header row, named columns, UTF-8, LF or CRLF)
// ---------------------------------------------------------------------------

SampleSet load_csv(const std::string& path, const std::vector<std::string>& input_columns,
                   const std::string& output_column);

void write_csv(const SampleSet& data, const std::string& path,
               const std::vector<std::string>& input_columns,
               const std::string& output_column);

// Affine per-coordinate input map fitted on the training split.
struct Scaler {
  std::vector<double> mean, sd;
  std::vector<double> apply(const std::vector<double>& x) const;
  std::vector<double> invert(const std::vector<double>& z) const;
};

struct SplitResult {
  SampleSet train, test;
  Scaler scaler;
};

// First 2/3 of the rows (file order) become the training split; inputs of
// both splits are standardized with training statistics only.
SplitResult split_and_standardize(const SampleSet& data);

}  // namespace lw2
