#pragma once

#include <cstdint>

namespace sketchseg {

// splitmix64: tiny counter-based generator. Used instead of <random> engines
// so that streams can be split by hashing (seed, index) and results do not
// depend on the standard library's distribution implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, n), n >= 1. Multiply-shift reduction; the modulo bias is
  // below 2^-32 for the small ranges used here.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>((static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Uniform in [lo, hi] inclusive.
  std::int64_t next_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [lo, hi).
  double next_double(double lo, double hi) { return lo + (hi - lo) * next_double(); }

 private:
  std::uint64_t state_;
};

// Derives an independent stream from (seed, indices...). Streams for distinct
// index tuples agree between serial and parallel schedules.
inline std::uint64_t hash_stream(std::uint64_t seed) { return seed; }

template <typename... Rest>
inline std::uint64_t hash_stream(std::uint64_t seed, std::uint64_t head, Rest... rest) {
  std::uint64_t z = seed ^ (head + 0x9e3779b97f4a7c15ull + (seed << 6) + (seed >> 2));
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  z ^= z >> 31;
  return hash_stream(z, rest...);
}

template <typename... Idx>
inline Rng stream_rng(std::uint64_t seed, Idx... idx) {
  return Rng(hash_stream(seed, static_cast<std::uint64_t>(idx)...));
}

}  // namespace sketchseg
