#pragma once

#include <cstdint>

#include "supcert/linalg.hpp"

namespace supcert {

// Counter-based 64-bit stream: output i is a fixed mix of (seed, i), so any
// position of the stream can be generated without stepping through the
// previous ones. Identical seeds give bit-identical streams on every run.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1), 53 mantissa bits.
  double next_double();
  double next_uniform(double lo, double hi);

  // Standard normal via Box-Muller; the paired value is cached.
  double next_gaussian();

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Stable per-trial seed derivation from a master seed and two indices.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b);

Matrix gaussian_design(std::size_t m, std::size_t n, SeededRng& rng);
// Exactly k nonzero entries, values +-1, support uniform over k-subsets.
Vector rademacher_signal(std::size_t n, std::size_t k, SeededRng& rng);
Vector uniform_noise(std::size_t m, double delta, SeededRng& rng);

}  // namespace supcert
