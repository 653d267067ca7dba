#pragma once

#include <cstdint>
#include <random>

namespace cfregret {

using Rng = std::mt19937_64;

// SplitMix64 finalizer. Used to derive independent seeds and as a stateless
// hash for per-(user, item) noise draws.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t mix64(std::uint64_t a, std::uint64_t b, std::uint64_t c) noexcept {
  return mix64(mix64(a, b), c);
}

// Maps a 64-bit hash onto [0, 1) using the top 53 bits.
constexpr double to_unit(std::uint64_t h) noexcept {
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

// Independent sub-stream of a master seed.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream) {
  return Rng{mix64(seed, stream)};
}

template <class Int>
Int uniform_below(Rng& rng, Int n) {
  return std::uniform_int_distribution<Int>{0, n - 1}(rng);
}

}  // namespace cfregret
