#include "alignbench/rng.hpp"

#include <cmath>
#include <numbers>

namespace alignbench {

std::uint64_t Rng64::next() {
  state_ += 0x9E3779B97F4A7C15ULL;
  std::uint64_t z = state_;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double Rng64::uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

std::size_t Rng64::below(std::size_t n) {
  if (n == 0) throw ContractError("Rng64::below: range must be positive");
  const auto wide = static_cast<unsigned __int128>(next()) * static_cast<unsigned __int128>(n);
  return static_cast<std::size_t>(wide >> 64);
}

double Rng64::gaussian() {
  if (cached_) {
    const double z = *cached_;
    cached_.reset();
    return z;
  }
  const double u1 = 1.0 - uniform();
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  return r * std::cos(theta);
}

std::vector<double> Rng64::gaussians(std::size_t n) {
  std::vector<double> out(n);
  for (double& v : out) v = gaussian();
  return out;
}

RealMatrix Rng64::gaussian_matrix(std::size_t rows, std::size_t cols, double stddev) {
  RealMatrix m(rows, cols);
  for (double& v : m.values()) v = stddev * gaussian();
  return m;
}

Rng64 Rng64::fork(std::uint64_t salt) {
  Rng64 probe(state_ ^ (salt * 0xD1B54A32D192ED03ULL));
  return Rng64(probe.next() ^ next());
}

std::vector<double> rng_gaussian(Rng64& rng, std::size_t n) { return rng.gaussians(n); }

}  // namespace alignbench
