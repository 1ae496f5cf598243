#pragma once

#include <array>
#include <cstdint>

namespace nase {

// splitmix64 finalizer (Steele, Lea, Flood 2014 mixing constants).
inline uint64_t splitmix64_mix(uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// The index-th output of the splitmix64 stream seeded with `seed`.
// O(1) in index, so independent sub-seeds are cheap to derive.
inline uint64_t derive_seed(uint64_t seed, uint64_t index) {
  return splitmix64_mix(seed + (index + 1) * 0x9e3779b97f4a7c15ull);
}

template <size_t N>
std::array<uint8_t, N> derive_bytes(uint64_t seed, uint64_t index) {
  std::array<uint8_t, N> out{};
  uint64_t word = 0;
  for (size_t i = 0; i < N; ++i) {
    if (i % 8 == 0) word = derive_seed(seed, index * 8 + i / 8);
    out[i] = static_cast<uint8_t>(word >> (8 * (i % 8)));
  }
  return out;
}

}  // namespace nase
