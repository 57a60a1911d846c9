#include "dmtrack/rng.hpp"

#include <cmath>

namespace dmtrack {
namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// SplitMix64 finalizer (Steele, Lea, Flood).
inline std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t derive_stream_key(std::uint64_t seed, StreamPurpose purpose,
                                std::uint64_t agent, std::uint64_t round) {
  std::uint64_t k = mix(seed + kGolden);
  k = mix(k ^ (static_cast<std::uint64_t>(purpose) + kGolden));
  k = mix(k ^ (agent + kGolden));
  k = mix(k ^ (round + kGolden));
  return k;
}

std::uint64_t RandomStream::next_u64() {
  state_ += kGolden;
  return mix(state_);
}

double RandomStream::uniform01() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RandomStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform01();
}

double RandomStream::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  // u1 in (0, 1] so the log is finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * M_PI * u2;
  spare_ = radius * std::sin(angle);
  has_spare_ = true;
  return radius * std::cos(angle);
}

}  // namespace dmtrack
