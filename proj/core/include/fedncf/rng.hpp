#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace fedncf {

/// SplitMix64, the project's single pseudorandom primitive.
///
/// Every derived seed, every sampling decision and every pairwise mask in the
/// repository expands from this generator, so its algorithm is pinned
/// bit-exactly (constants below, test vectors in docs/prg.md). It is a
/// counter-based design: output i depends only on seed + (i+1)*GAMMA, which is
/// what lets two mask-agreement parties expand the same seed to the same
/// stream with no shared state.
struct SplitMix64 {
  std::uint64_t state;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

/// Deterministic distributions over SplitMix64. Intentionally minimal: the
/// standard <random> distributions are not specified bit-exactly across
/// library implementations, and reproducibility here is a contract, not a
/// convenience.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_.next(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_.next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Unbiased uniform integer in [0, n). n must be > 0.
  std::uint64_t below(std::uint64_t n) {
    // Rejection from the top to remove modulo bias.
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = gen_.next();
    } while (v >= limit);
    return v % n;
  }

  /// Normal draw via Box-Muller. Two uniforms per call, no cached spare, so
  /// consumption is predictable.
  double normal(double mean, double stddev) {
    double u1;
    do {
      u1 = uniform();
    } while (u1 <= 0.0);
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  SplitMix64 gen_;
};

/// Keyed seed derivation: folds each path component through SplitMix64 so
/// streams keyed by (master_seed, purpose, user, round, ...) are independent
/// regardless of execution schedule.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t component) {
  SplitMix64 g(base ^ (component + 0x9e3779b97f4a7c15ULL));
  return g.next();
}

template <typename... Rest>
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t component, Rest... rest) {
  return derive_seed(derive_seed(base, component), rest...);
}

// Stream purpose tags for derive_seed paths. Values are arbitrary but frozen:
// changing one changes every downstream result.
namespace seed_tag {
inline constexpr std::uint64_t kModelInit = 0x01;
inline constexpr std::uint64_t kUserVector = 0x02;
inline constexpr std::uint64_t kSelection = 0x03;
inline constexpr std::uint64_t kLocalTrain = 0x04;
inline constexpr std::uint64_t kSeedExchange = 0x05;
inline constexpr std::uint64_t kEvalNegatives = 0x06;
inline constexpr std::uint64_t kTrainNegatives = 0x07;
inline constexpr std::uint64_t kShuffle = 0x08;
}  // namespace seed_tag

}  // namespace fedncf
