#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace stampacchia {

inline std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Generator for the stream named `label` (and `index`) derived from one
/// experiment seed; streams with different labels are independent.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view label, std::uint64_t index = 0) {
  const std::uint64_t s = splitmix64(splitmix64(seed ^ fnv1a(label)) + index);
  return std::mt19937_64(s);
}

} // namespace stampacchia
