#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace z2sync {

inline constexpr std::uint64_t kGoldenGamma = 0x9e3779b97f4a7c15ULL;

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Folds (base, words...) into a 64-bit stream key. Order-sensitive, so
// derive_seed(s, a, b) and derive_seed(s, b, a) give unrelated streams.
// Every substream in the library (per-trial, per-start, per-tag) is keyed
// through this function; that is the whole reproducibility contract.
template <class... Words>
constexpr std::uint64_t derive_seed(std::uint64_t base, Words... words) {
  std::uint64_t h = mix64(base + kGoldenGamma);
  ((h = mix64(h ^ (static_cast<std::uint64_t>(words) + kGoldenGamma + (h << 6) + (h >> 2)))),
   ...);
  return h;
}

// Stream tags, so that e.g. the graph draw and the noise draw of one seed
// never alias.
namespace streams {
inline constexpr std::uint64_t kTruth = 1;
inline constexpr std::uint64_t kGraph = 2;
inline constexpr std::uint64_t kNoise = 3;
inline constexpr std::uint64_t kAdversary = 4;
inline constexpr std::uint64_t kSolverInit = 5;
inline constexpr std::uint64_t kStart = 6;
inline constexpr std::uint64_t kLanczos = 7;
inline constexpr std::uint64_t kEscapeDir = 8;
inline constexpr std::uint64_t kTrialGen = 9;
inline constexpr std::uint64_t kTrialSolve = 10;
inline constexpr std::uint64_t kTrialAdversary = 11;
inline constexpr std::uint64_t kSpectral = 12;
}  // namespace streams

// xoshiro256++ seeded via SplitMix64. Sampling (uniform, normal, bounded
// ints) is implemented here rather than with <random> distributions because
// those are implementation-defined and would break bit-reproducibility of
// generated instances across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& word : state_) {
      sm += kGoldenGamma;
      word = mix64(sm);
    }
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller; one value cached per pair.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * kPi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

  // Uniform integer in [0, bound), rejection-sampled (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t bound) {
    const std::uint64_t rem = (std::numeric_limits<std::uint64_t>::max() % bound + 1) % bound;
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - rem;
    std::uint64_t draw = next_u64();
    while (draw > limit) draw = next_u64();
    return draw % bound;
  }

  int sign() { return (next_u64() >> 63) ? 1 : -1; }

 private:
  static constexpr double kPi = 3.141592653589793238462643383279502884;

  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t state_[4];
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace z2sync
