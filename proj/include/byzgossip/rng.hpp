#pragma once

#include <cstdint>
#include <random>

namespace byzgossip {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

enum class StreamPurpose : std::uint64_t {
  GraphSample = 1,
  TaskData = 2,
  InitialState = 3,
  GradientNoise = 4,
  Trial = 5,
};

/// Counter-based stream key: every (root, purpose, node, round) tuple maps to an
/// independent generator, so adding draws in one stream never shifts another.
constexpr std::uint64_t stream_key(std::uint64_t root, StreamPurpose purpose, std::uint64_t node = 0,
                                   std::uint64_t round = 0) noexcept {
  std::uint64_t h = mix64(root);
  h = mix64(h ^ static_cast<std::uint64_t>(purpose));
  h = mix64(h ^ node);
  h = mix64(h ^ round);
  return h;
}

inline std::mt19937_64 make_stream(std::uint64_t root, StreamPurpose purpose, std::uint64_t node = 0,
                                   std::uint64_t round = 0) {
  return std::mt19937_64(stream_key(root, purpose, node, round));
}

}  // namespace byzgossip
