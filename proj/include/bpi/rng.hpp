#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace bpi {

using Engine = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Seed of the private stream for replicate `index` of the experiment tagged
/// `tag`. Depends only on its arguments, never on worker scheduling.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::string_view tag,
                                    std::uint64_t index) {
  return splitmix64(splitmix64(master ^ fnv1a(tag)) + splitmix64(index + 1));
}

inline Engine make_stream(std::uint64_t master, std::string_view tag, std::uint64_t index) {
  return Engine{derive_seed(master, tag, index)};
}

}  // namespace bpi
