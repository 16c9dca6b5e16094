#pragma once

#include <cstdint>
#include <string_view>

namespace thermap {

/// 64-bit FNV-1a. Stable across platforms, used for cache keys.
constexpr std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace thermap
