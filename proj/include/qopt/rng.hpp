#pragma once

#include <cstdint>
#include <random>

namespace qopt::rng {

// All randomness in the library flows through std::mt19937_64, whose output
// sequence is pinned down by the standard, so a seed reproduces the same
// stream on every platform. Raw draws are mapped to doubles here instead of
// going through std::uniform_real_distribution, whose mapping is
// implementation defined.

// Uniform double in [0, 1) from the top 53 bits of one 64-bit draw.
inline double unit_double(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Uniform double in [lo, hi).
inline double uniform_double(std::mt19937_64& gen, double lo, double hi) {
  return lo + (hi - lo) * unit_double(gen);
}

// SplitMix64 finalizer; decorrelates nearby inputs.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent substream seed from a base seed and two stream
// labels (purpose tag, repetition index). Used wherever one user-facing
// seed has to drive several logically separate sample streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t tag,
                                 std::uint64_t index = 0) {
  std::uint64_t s = splitmix64(base);
  s = splitmix64(s ^ splitmix64(tag + 0x1ull));
  s = splitmix64(s ^ splitmix64(index + 0x2ull));
  return s;
}

// Stream tags used by the pipeline; kept in one place so independent
// components never collide on the same derived stream.
inline constexpr std::uint64_t kTagSamples = 1;
inline constexpr std::uint64_t kTagVolumes = 2;
inline constexpr std::uint64_t kTagReference = 3;
inline constexpr std::uint64_t kTagCoefficients = 4;
inline constexpr std::uint64_t kTagConvergenceSites = 5;
inline constexpr std::uint64_t kTagConvergenceReference = 6;

}  // namespace qopt::rng
