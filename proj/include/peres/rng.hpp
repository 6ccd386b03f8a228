#pragma once

// Seedable, counter-derived random substreams. A substream is identified by
// (seed, tag, counter); the same triple always yields the same sequence
// regardless of which thread evaluates it or in which order.

#include <cstdint>
#include <random>

namespace peres {

using Engine = std::mt19937_64;

/// Stream tags. Values are part of the reproducibility contract; append only.
enum class StreamTag : std::uint64_t {
  kCyclePermutation = 1,
  kSettingNoise = 2,
  kMcPower = 3,
  kMcPhase = 4,
  kMcContrast = 5,
};

std::uint64_t splitmix64(std::uint64_t x);

Engine substream(std::uint64_t seed, StreamTag tag, std::uint64_t counter,
                 std::uint64_t sub_counter = 0);

/// Worker count for internal parallel loops: PERES_BENCH_THREADS if set and
/// positive, otherwise hardware concurrency (at least 1).
unsigned worker_threads();

}  // namespace peres
