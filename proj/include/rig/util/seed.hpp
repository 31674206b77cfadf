#pragma once

#include <cstdint>
#include <initializer_list>

namespace rig::util {

/// Advances `state` and returns the next splitmix64 output.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Order-sensitive hash of a tuple of integers.
template <typename... Ts>
std::uint64_t mix_seed(Ts... parts) {
  std::uint64_t h = 0x243F6A8885A308D3ULL;
  for (std::uint64_t p : {static_cast<std::uint64_t>(parts)...}) {
    std::uint64_t s = h ^ p;
    h = splitmix64(s);
  }
  return h;
}

}  // namespace rig::util
