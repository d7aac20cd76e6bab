#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace firmnet::rng {

// splitmix64 finalizer; bijective on 64-bit words.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t hash_tag(std::string_view tag) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : tag) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Derives an independent engine for a named substream of the master seed.
// Streams are stable under scheduling: every consumer owns its engine.
inline std::mt19937_64 substream(std::uint64_t seed, std::string_view tag,
                                 std::uint64_t index = 0) {
  std::uint64_t s = mix64(seed ^ mix64(hash_tag(tag)) ^ mix64(index * 0xda942042e4dd58b5ULL + 1));
  return std::mt19937_64(s);
}

}  // namespace firmnet::rng
