#include "supcert/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace supcert {

namespace {

std::uint64_t splitmix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t SeededRng::next_u64() {
  return splitmix64(seed_ ^ splitmix64(counter_++));
}

double SeededRng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_uniform(double lo, double hi) {
  return lo + (hi - lo) * next_double();
}

double SeededRng::next_gaussian() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1 = next_double();
  double u2 = next_double();
  // Guard log(0); shifts u1 into (0, 1].
  double r = std::sqrt(-2.0 * std::log(1.0 - u1));
  double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return splitmix64(splitmix64(master ^ 0x5851f42d4c957f2dULL) ^ splitmix64(a * 0x2545f4914f6cdd1dULL + b));
}

Matrix gaussian_design(std::size_t m, std::size_t n, SeededRng& rng) {
  Matrix phi(m, n);
  for (double& v : phi.data()) v = rng.next_gaussian();
  return phi;
}

Vector rademacher_signal(std::size_t n, std::size_t k, SeededRng& rng) {
  if (k < 1 || k > n) throw std::invalid_argument("rademacher_signal: need 1 <= k <= n");
  // Partial Fisher-Yates: the first k entries of the shuffled index list
  // form a uniform k-subset.
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + static_cast<std::size_t>(rng.next_u64() % (n - i));
    std::swap(idx[i], idx[j]);
  }
  Vector x(n, 0.0);
  for (std::size_t i = 0; i < k; ++i) x[idx[i]] = rng.next_double() < 0.5 ? -1.0 : 1.0;
  return x;
}

Vector uniform_noise(std::size_t m, double delta, SeededRng& rng) {
  if (delta < 0.0) throw std::invalid_argument("uniform_noise: delta must be nonnegative");
  Vector w(m, 0.0);
  if (delta == 0.0) {
    // Still consume the stream so trial layouts do not depend on delta.
    for (std::size_t i = 0; i < m; ++i) rng.next_double();
    return w;
  }
  for (std::size_t i = 0; i < m; ++i) w[i] = rng.next_uniform(-delta, delta);
  return w;
}

}  // namespace supcert
