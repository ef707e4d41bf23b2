#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

namespace churngrid {

// All randomness in the pipeline flows through the two generators below.
// Both are fixed, published algorithms (SplitMix64 and xoshiro256++), so a
// given seed produces the same byte stream on every platform and in every
// reimplementation. Floating-point sampling on top of the integer stream
// uses only the formulas written out here.

inline uint64_t splitmix64_next(uint64_t& state) {
  uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Sub-seed derivation: absorb each term into a SplitMix64 chain. Used to
// give every customer / epoch / example an independent stream so that
// generation order and parallel scheduling cannot change results.
template <typename... Terms>
uint64_t derive_seed(uint64_t seed, Terms... terms) {
  uint64_t h = seed;
  (void)splitmix64_next(h);
  for (uint64_t t : {static_cast<uint64_t>(terms)...}) {
    h ^= t;
    (void)splitmix64_next(h);
  }
  return h;
}

// xoshiro256++ (Blackman & Vigna), seeded through SplitMix64.
class Rng {
 public:
  explicit Rng(uint64_t seed) {
    uint64_t s = seed;
    for (auto& word : state_) word = splitmix64_next(s);
  }

  uint64_t next_u64() {
    const uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0,1), 53 bits of mantissa.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased integer in [0,n) by rejection.
  uint64_t uniform_int(uint64_t n) {
    const uint64_t threshold = (0 - n) % n;
    for (;;) {
      uint64_t x = next_u64();
      if (x >= threshold) return x % n;
    }
  }

  bool bernoulli(double p) { return uniform() < p; }

  // Inverse-CDF exponential; log1p(-u) keeps u == 0 finite.
  double exponential(double mean) { return -mean * std::log1p(-uniform()); }

  // Box-Muller, cosine branch only.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log1p(-u1)) * std::cos(2.0 * kPi * u2);
  }

  // Mean-preserving lognormal: E[X] == mean for any sigma.
  double lognormal_mean(double mean, double sigma) {
    return mean * std::exp(sigma * normal() - 0.5 * sigma * sigma);
  }

  // Knuth's product method; fine for the small per-slice rates used here.
  int poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    const double limit = std::exp(-lambda);
    int k = 0;
    double p = 1.0;
    do {
      ++k;
      p *= uniform();
    } while (p > limit);
    return k - 1;
  }

 private:
  static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  static constexpr double kPi = 3.141592653589793238462643383279502884;
  std::array<uint64_t, 4> state_;
};

// Fisher-Yates, descending, so a fixed seed fixes the permutation.
template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
  for (size_t i = items.size(); i > 1; --i) {
    const size_t j = rng.uniform_int(i);
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace churngrid
