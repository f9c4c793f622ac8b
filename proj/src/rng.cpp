#include "lw2/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace lw2 {

uint64_t mix_seed(uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

Rng::Rng(uint64_t seed) : seed_(seed), eng_(mix_seed(seed)) {}

Rng Rng::fork(uint64_t stream_id) const {
  return Rng(mix_seed(seed_ ^ mix_seed(stream_id + 1)));
}

double Rng::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::uniform(double a, double b) { return a + (b - a) * uniform01(); }

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite
  double u1 = (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
  double u2 = uniform01();
  double r = std::sqrt(-2.0 * std::log(u1));
  double t = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(t);
  has_spare_ = true;
  return r * std::cos(t);
}

double Rng::normal(double mean, double sd) {
  if (sd < 0) throw std::invalid_argument("normal: sd must be >= 0");
  return mean + sd * normal();
}

double Rng::exponential(double rate) {
  if (rate <= 0) throw std::invalid_argument("exponential: rate must be > 0");
  double u = uniform01();
  return -std::log1p(-u) / rate;
}

double Rng::gamma(double shape) {
  if (shape <= 0) throw std::invalid_argument("gamma: shape must be > 0");
  if (shape < 1.0) {
    // boost to shape+1, then scale back
    double u = uniform01();
    while (u == 0.0) u = uniform01();
    return gamma(shape + 1.0) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0) continue;
    v = v * v * v;
    double u = uniform01();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
    if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
  }
}

double Rng::beta(double alpha, double beta) {
  if (alpha <= 0 || beta <= 0) throw std::invalid_argument("beta: parameters must be > 0");
  double g1 = gamma(alpha);
  double g2 = gamma(beta);
  return g1 / (g1 + g2);
}

}  // namespace lw2
