#pragma once

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

// Deterministic, platform-independent randomness and hashing.
//
// Every sampled decision in the pipeline must replay bit-exactly across
// machines and runs, so all randomness flows through the counter-based
// generator below (SplitMix64 finalizer over seed and counter) instead of
// std::mt19937 / std::hash, whose layouts are implementation-defined.

namespace mmpipe::rng {

/// SplitMix64 finalizer. Bijective on 64-bit values.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

/// The index-th draw of a seeded stream, as a pure function of (seed, index).
constexpr std::uint64_t draw_at(std::uint64_t seed, std::uint64_t index) noexcept {
  return mix64(seed ^ mix64(index));
}

/// Maps 64 random bits onto [0, 1).
constexpr double to_unit(std::uint64_t bits) noexcept {
  // Top 53 bits -> double mantissa.
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

/// Stateful convenience wrapper over draw_at.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t next_u64() { return draw_at(seed_, counter_++); }
  double next_unit() { return to_unit(next_u64()); }

  /// Uniform integer in [0, n). n must be > 0. Uses rejection sampling so the
  /// result is exactly uniform and reproducible.
  std::uint64_t next_below(std::uint64_t n) {
    const std::uint64_t limit = n * ((~std::uint64_t{0}) / n);
    std::uint64_t v = next_u64();
    while (v >= limit) v = next_u64();
    return v % n;
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

/// Fisher-Yates shuffle driven by a CounterRng.
template <typename T>
void shuffle(std::vector<T>& items, CounterRng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.next_below(i));
    using std::swap;
    swap(items[i - 1], items[j]);
  }
}

/// FNV-1a 64-bit hash. Stable across platforms, unlike std::hash.
constexpr std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (const char c : bytes) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001B3ull;
  }
  return h;
}

/// Combines hashes (for derived seeds: shard seeds, per-epoch reshuffles).
constexpr std::uint64_t combine(std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(a ^ mix64(b));
}

}  // namespace mmpipe::rng
