// Copyright 2026 The ConTextual Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <initializer_list>
#include <string_view>

namespace contextual {

// Deterministic, platform-independent pseudorandom primitives. Everything
// that needs reproducible "random" values (mini-transformer weights, hashed
// embeddings) is keyed through these so runs are bit-stable across machines.

inline constexpr std::uint64_t kSplitmixGamma = 0x9E3779B97F4A7C15ULL;

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += kSplitmixGamma);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t state = x;
  return splitmix64_next(state);
}

/// Collapses a tuple of key components into a single stream state.
inline std::uint64_t stream_key(std::initializer_list<std::uint64_t> parts) {
  std::uint64_t key = 0x243F6A8885A308D3ULL;
  for (std::uint64_t part : parts) {
    key = mix64(key ^ (part + kSplitmixGamma + (key << 6) + (key >> 2)));
  }
  return key;
}

/// Uniform double in [-1, 1) from 64 random bits.
inline double bits_to_pm1(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53 * 2.0 - 1.0;
}

/// Sequential generator over a keyed stream; draws are uniform in [-1, 1).
class KeyedStream {
 public:
  explicit KeyedStream(std::uint64_t key) : state_(key) {}
  KeyedStream(std::initializer_list<std::uint64_t> parts)
      : state_(stream_key(parts)) {}

  std::uint64_t next_bits() { return splitmix64_next(state_); }
  double next_pm1() { return bits_to_pm1(next_bits()); }

 private:
  std::uint64_t state_;
};

/// FNV-1a over UTF-8 bytes; the stable token -> id mapping used everywhere.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t hash = 14695981039346656037ULL;
  for (unsigned char byte : bytes) {
    hash ^= static_cast<std::uint64_t>(byte);
    hash *= 1099511628211ULL;
  }
  return hash;
}

inline std::uint32_t stable_vocab_id(std::string_view token) {
  return static_cast<std::uint32_t>(fnv1a64(token) & 0xFFFFFFFFULL);
}

}  // namespace contextual
