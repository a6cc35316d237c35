#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace intentnav {

/// Named subsystem streams derived from one master seed. Each subsystem draws
/// from its own generator so toggling noise in one never shifts another.
enum class Stream : std::uint64_t {
  kSensor = 0x5e,
  kScenario = 0x5c,
  kEval = 0xe7,
  kTest = 0x7e,
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Generator for (seed, stream, index). `index` is typically a tick number.
inline std::mt19937_64 makeStream(std::uint64_t seed, Stream stream, std::uint64_t index = 0) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ static_cast<std::uint64_t>(stream));
  const std::uint64_t c = splitmix64(b + index);
  std::seed_seq seq{static_cast<std::uint32_t>(c), static_cast<std::uint32_t>(c >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return std::mt19937_64(seq);
}

}  // namespace intentnav
