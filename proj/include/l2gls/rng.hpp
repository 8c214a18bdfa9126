#pragma once

// Deterministic random number generation.
//
// Everything that consumes randomness in this library goes through SplitMix64
// so that a run is reproducible from a single 64-bit seed on any platform.
// The standard <random> distributions are deliberately avoided: their output
// sequences are implementation-defined and would break cross-platform
// reproducibility of benchmarks.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace l2gls {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of randomness.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform integer in [lo, hi], both inclusive.
  int next_int(int lo, int hi) {
    if (lo > hi) throw std::invalid_argument("next_int: empty range");
    const std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
    return lo + static_cast<int>(next_u64() % span);
  }

  // Box-Muller transform, one variate per call. Uses exactly two raw draws,
  // which keeps the consumption pattern deterministic.
  double next_normal(double mean, double stddev) {
    double u1 = next_double();
    const double u2 = next_double();
    if (u1 < 1e-300) u1 = 1e-300;
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(next_u64() % i);
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::uint64_t state_;
};

// Derives an independent stream seed from a base seed and a stream index.
// Pure function of its inputs, so worker i of a benchmark always sees the
// same stream no matter how work is scheduled.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
  SplitMix64 g(base + 0x632be59bd9b4e019ULL * (stream + 1));
  return g.next_u64();
}

// Draws an index from a discrete distribution. The probabilities must be
// non-negative and sum to 1 within a loose tolerance.
inline int sample_categorical(const std::vector<double>& probs, SplitMix64& rng) {
  if (probs.empty()) throw std::invalid_argument("sample_categorical: empty distribution");
  double total = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0)) throw std::invalid_argument("sample_categorical: negative or NaN probability");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-6)
    throw std::invalid_argument("sample_categorical: probabilities do not sum to 1");
  const double u = rng.next_double() * total;
  double acc = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    acc += probs[i];
    if (u < acc) return static_cast<int>(i);
  }
  return static_cast<int>(probs.size()) - 1;
}

}  // namespace l2gls
