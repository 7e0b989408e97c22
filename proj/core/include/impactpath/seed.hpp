#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>

namespace impactpath {

/// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// 64-bit FNV-1a; stable across platforms and releases.
constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

/// Order-sensitive combination of seed words.
constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) noexcept {
  return splitmix64(splitmix64(splitmix64(a) ^ b) ^ c);
}

/// Member seed = mix(plan seed, fnv1a(tag), member index). Tags used by the
/// harness are "baseline" and "eruption".
constexpr std::uint64_t derive_member_seed(std::uint64_t plan_seed, std::string_view tag,
                                           std::size_t member_index) noexcept {
  return mix_seed(plan_seed, fnv1a64(tag), static_cast<std::uint64_t>(member_index));
}

}  // namespace impactpath
