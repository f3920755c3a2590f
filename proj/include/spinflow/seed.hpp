#pragma once

#include <cstdint>
#include <initializer_list>
#include <span>

namespace spinflow {

/// SplitMix64 finaliser.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Seed for the task at `path` under `root`:
///   h = mix64(root); for each coordinate c: h = mix64(h ^ mix64(c + 0x632be59bd9b4e019)).
/// The constants are part of the output format and must not change.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::span<const std::uint64_t> path) {
  std::uint64_t h = mix64(root);
  for (std::uint64_t c : path) h = mix64(h ^ mix64(c + 0x632be59bd9b4e019ULL));
  return h;
}

constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) {
  return derive_seed(root, std::span<const std::uint64_t>(path.begin(), path.size()));
}

} // namespace spinflow
