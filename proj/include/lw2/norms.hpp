#pragma once

#include <span>
#include <vector>

#include "lw2/util.hpp"

namespace lw2 {

// Input-space norm used when collecting neighborhoods. The heterogeneous
// variant weights each coordinate by the slope of a linear fit of the output
// on the inputs, so directions the output is more sensitive to count for more.
struct InputNorm {
  enum class Kind { Homogeneous, Heterogeneous };
  Kind kind = Kind::Homogeneous;
  std::vector<double> weights;  // heterogeneous only, one per input coordinate

  static InputNorm homogeneous() { return {}; }
  static InputNorm heterogeneous(std::vector<double> c);

  double operator()(std::span<const double> x) const;
  double distance(std::span<const double> x, std::span<const double> y) const;
};

// OLS of the scalar outputs on the inputs (with intercept); the slope vector
// becomes the heterogeneous weight vector, the intercept is dropped.
InputNorm fit_hetero_norm(const std::vector<std::vector<double>>& inputs,
                          const std::vector<double>& outputs);

// Solve the (n+1)-parameter least squares problem and return all coefficients,
// intercept first. Exposed for reuse; throws on rank deficiency.
std::vector<double> ols_fit(const std::vector<std::vector<double>>& inputs,
                            const std::vector<double>& outputs);

}  // namespace lw2
