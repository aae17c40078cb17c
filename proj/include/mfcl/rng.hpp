#pragma once

#include <cstdint>

namespace mfcl {

// Counter-based generator: every draw is a pure function of
// (seed, stream, item, draw), so results do not depend on the order in
// which replicates or particles are processed.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream)
      : key_(mix(mix(seed) ^ (stream * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull))) {}

  constexpr std::uint64_t bits(std::uint64_t item, std::uint64_t draw) const {
    std::uint64_t x = mix(key_ ^ (item * 0x9E3779B97F4A7C15ull));
    return mix(x ^ (draw * 0xC2B2AE3D27D4EB4Full + 0x165667B19E3779F9ull));
  }

  /// Uniform on the open interval (0, 1).
  constexpr double uniform(std::uint64_t item, std::uint64_t draw) const {
    return (static_cast<double>(bits(item, draw) >> 11) + 0.5) * 0x1.0p-53;
  }

 private:
  static constexpr std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
};

}  // namespace mfcl
