#pragma once

// Deterministic hashing and random draws. std::mt19937_64 output is pinned by
// the standard, but the std distributions are not, so anything that has to
// reproduce bit-for-bit across platforms maps engine bits itself.

#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <string_view>
#include <vector>

namespace ldir {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

// Uniform double in [0, 1) from the top 53 engine bits.
inline double uniform01(std::mt19937_64& gen) {
  return static_cast<double>(gen() >> 11) * 0x1.0p-53;
}

// Unbiased integer in [0, bound) via rejection sampling. bound >= 1.
inline std::uint64_t uniform_below(std::mt19937_64& gen, std::uint64_t bound) {
  const std::uint64_t threshold = (~bound + 1ull) % bound;  // 2^64 mod bound
  for (;;) {
    const std::uint64_t r = gen();
    if (r >= threshold) return r % bound;
  }
}

// n distinct indices from {0..count-1} in draw order (partial Fisher-Yates).
inline std::vector<std::size_t> sample_without_replacement(std::size_t count,
                                                           std::size_t n,
                                                           std::mt19937_64& gen) {
  std::vector<std::size_t> pool(count);
  std::iota(pool.begin(), pool.end(), std::size_t{0});
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(uniform_below(gen, count - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(n);
  return pool;
}

}  // namespace ldir
