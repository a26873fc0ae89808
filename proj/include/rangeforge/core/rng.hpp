#pragma once

#include <cstdint>
#include <string_view>

namespace rangeforge {

// FNV-1a over the UTF-8 bytes. Stable across platforms and runs.
constexpr std::uint64_t stable_hash(std::string_view s) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// splitmix64. State advances by the golden gamma on every draw.
class SplitMix64 {
 public:
  constexpr explicit SplitMix64(std::uint64_t state) noexcept : state_(state) {}

  constexpr std::uint64_t next() noexcept {
    state_ += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  constexpr std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

// Generator for a named entity under an instance seed: seed XOR hash(name).
constexpr SplitMix64 keyed_generator(std::uint64_t seed, std::string_view name) noexcept {
  return SplitMix64(seed ^ stable_hash(name));
}

// The n-th (0-based) draw of a keyed generator, without carrying state around.
constexpr std::uint64_t keyed_draw(std::uint64_t seed, std::string_view name,
                                   std::uint64_t n) noexcept {
  SplitMix64 g = keyed_generator(seed, name);
  std::uint64_t v = 0;
  for (std::uint64_t i = 0; i <= n; ++i) v = g.next();
  return v;
}

}  // namespace rangeforge
