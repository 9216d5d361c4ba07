#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "alignbench/matrix.hpp"

namespace alignbench {

// Portable deterministic generator.
//
// Core: SplitMix64. Each call adds the golden-ratio increment
// 0x9E3779B97F4A7C15 to the state and mixes it with
//   z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   z =  z ^ (z >> 31)
// Uniform doubles take the top 53 bits: (next() >> 11) * 2^-53, in [0, 1).
// Gaussians use Box-Muller on (u1, u2) with u1 = 1 - uniform() in (0, 1]:
//   r = sqrt(-2 ln u1), z0 = r cos(2 pi u2), z1 = r sin(2 pi u2)
// z0 is returned first and z1 is cached for the following call.
class Rng64 {
 public:
  explicit Rng64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();
  double uniform();
  // Uniform integer in [0, n) by 128-bit multiply-high; n must be positive.
  std::size_t below(std::size_t n);
  double gaussian();
  std::vector<double> gaussians(std::size_t n);
  RealMatrix gaussian_matrix(std::size_t rows, std::size_t cols, double stddev);

  // Derives an independent stream; used to give each component of a run
  // its own generator without coupling their consumption.
  Rng64 fork(std::uint64_t salt);

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
  std::optional<double> cached_;
};

// Convenience matching the module's functional form.
std::vector<double> rng_gaussian(Rng64& rng, std::size_t n);

// Fisher-Yates shuffle driven by Rng64.
template <typename T>
void shuffle(std::vector<T>& items, Rng64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = rng.below(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace alignbench
