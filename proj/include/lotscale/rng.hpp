#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace lotscale {

// splitmix64 step. Used only for seed mixing/derivation, never as the
// sampling generator itself.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Per-run seed derivation: three splitmix64 rounds folding in (a, b) so that
// the derived seed depends only on the tuple, not on execution order or
// worker count.
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = base;
  std::uint64_t h = splitmix64(s);
  s ^= a;
  h ^= splitmix64(s);
  s ^= b;
  h ^= splitmix64(s);
  return h;
}

// Deterministic sampling stream. mt19937_64's output sequence is fixed by the
// standard, and every mapping below is explicit arithmetic on raw 64-bit
// draws, so streams are bit-reproducible across platforms and compilers
// (std::uniform_real_distribution and friends are not, hence avoided).
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n). Lemire multiply-shift; the O(2^-64) bias is
  // irrelevant here, the fixed mapping is what matters.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(engine_()) * n) >> 64);
  }

  // Standard normal via Box-Muller with a cached spare.
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 1.0 - uniform01();  // (0, 1], keeps log finite
    double u2 = uniform01();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

  // Independent substream k derived from a parent seed (splitting rule:
  // substream seed = mix_seed(seed, kSubstreamTag, k)).
  static constexpr std::uint64_t kSubstreamTag = 0x5B5D7E8Aull;
  static RandomStream substream(std::uint64_t seed, std::uint64_t k) {
    return RandomStream(mix_seed(seed, kSubstreamTag, k));
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace lotscale
