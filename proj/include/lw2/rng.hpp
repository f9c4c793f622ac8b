#pragma once

#include <cstdint>
#include <random>

namespace lw2 {

// Deterministic random stream. All variate transforms are implemented on top
// of the raw mt19937_64 output so that a given (seed, call sequence) yields
// the same doubles everywhere. Streams are cheap; fork() derives an
// independent child stream, never share one stream across threads.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64() { return eng_(); }

  double uniform01();                      // [0, 1)
  double uniform(double a, double b);      // [a, b)
  double normal();                         // standard normal (Box-Muller)
  double normal(double mean, double sd);
  double exponential(double rate);         // mean 1/rate
  double gamma(double shape);              // unit scale (Marsaglia-Tsang)
  double beta(double alpha, double beta);

  Rng fork(uint64_t stream_id) const;

  uint64_t seed() const { return seed_; }

 private:
  uint64_t seed_;
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

// SplitMix64 finalizer, used to decorrelate derived seeds.
uint64_t mix_seed(uint64_t x);

}  // namespace lw2
