#pragma once

#include <cstdint>
#include <random>

namespace noisyst {

// Thin wrapper over mt19937_64 with platform-independent conversions.
// std::uniform_*_distribution is implementation-defined, so every draw that
// feeds a reproducible artifact goes through here instead.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  // Uniform in [0, 1) with 53 random bits.
  double uniform();
  // Uniform integer in [0, n); n > 0.
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
// Order-sensitive combination of two seeds.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b);

}  // namespace noisyst
