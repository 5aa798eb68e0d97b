#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace spaci {

/// 64-bit FNV-1a. Stable across platforms and runs, unlike std::hash.
constexpr std::uint64_t fnv1a(std::string_view data,
                              std::uint64_t h = 0xcbf29ce484222325ULL) noexcept {
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Hash of several fields; a separator byte keeps ("ab","c") apart from ("a","bc").
inline std::uint64_t hash_fields(std::initializer_list<std::string_view> fields) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (std::string_view f : fields) {
    h = fnv1a(f, h);
    h = fnv1a(std::string_view("\x1f", 1), h);
  }
  return h;
}

/// Uniform double in [0, 1) from a hash value.
inline double unit_interval(std::uint64_t h) noexcept {
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdULL;
  h ^= h >> 33;
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

}  // namespace spaci
