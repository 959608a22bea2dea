#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace mazerl {

// splitmix64; used to derive independent seed streams from (seed, tags...).
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t h = 0x6a09e667f3bcc909ULL;
  for (std::uint64_t p : parts) h = splitmix64(h ^ splitmix64(p));
  return h;
}

// Deterministic RNG wrapper. Draws avoid std::uniform_*_distribution so that
// streams are reproducible independent of the standard library in use.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, bound); bound must be > 0.
  std::uint32_t uniform_int(std::uint32_t bound) {
    const std::uint64_t span = bound;
    const std::uint64_t limit = std::uint64_t(-1) - std::uint64_t(-1) % span;
    std::uint64_t r = next_u64();
    while (r >= limit) r = next_u64();
    return static_cast<std::uint32_t>(r % span);
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

 private:
  std::mt19937_64 engine_;
};

inline Rng derive_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                      std::uint64_t c = 0) {
  return Rng(mix_seed({seed, a, b, c}));
}

// Stream tags keep unrelated consumers of the same user seed independent.
namespace stream {
inline constexpr std::uint64_t kMaze = 0x01;
inline constexpr std::uint64_t kSpurious = 0x02;
inline constexpr std::uint64_t kDataset = 0x03;
inline constexpr std::uint64_t kSample = 0x04;
inline constexpr std::uint64_t kExplore = 0x05;
inline constexpr std::uint64_t kMapo = 0x06;
inline constexpr std::uint64_t kRandomSearch = 0x07;
inline constexpr std::uint64_t kGpFit = 0x08;
inline constexpr std::uint64_t kPropose = 0x09;
inline constexpr std::uint64_t kTrial = 0x0a;
inline constexpr std::uint64_t kRerank = 0x0b;
inline constexpr std::uint64_t kBatch = 0x0c;
}  // namespace stream

}  // namespace mazerl
