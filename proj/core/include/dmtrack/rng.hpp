#pragma once

#include <cstdint>

namespace dmtrack {

/// Purpose tags keep the random substreams of different subsystems disjoint
/// even when they share a master seed.
enum class StreamPurpose : std::uint64_t {
  kTrajectoryNoise = 1,
  kGradientObservation = 2,
  kSampling = 3,
};

/// Derives the state key of the (purpose, agent, round) substream of a master
/// seed. Counter-based derivation makes a run independent of the order agents
/// are processed in, so per-agent work can execute concurrently without
/// changing any produced number.
std::uint64_t derive_stream_key(std::uint64_t seed, StreamPurpose purpose,
                                std::uint64_t agent, std::uint64_t round);

/// Small deterministic generator (SplitMix64 core). One instance per
/// substream; construction is cheap, states never alias across keys produced
/// by derive_stream_key.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform01();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  /// Standard normal via Box-Muller; consumes two uniforms per pair and
  /// caches the spare, so the draw sequence is fully pinned.
  double normal();

 private:
  std::uint64_t state_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace dmtrack
