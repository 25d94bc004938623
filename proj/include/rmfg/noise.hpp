#pragma once

// Counter-based Gaussian noise. Every draw is a pure function of
// (seed, replication, agent, step, lane), so results do not depend on scheduling.

#include <array>
#include <cstdint>

#include "rmfg/numkit.hpp"

namespace rmfg {

using PhiloxCounter = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

/// Philox4x32 with 10 rounds.
PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key);

class NoiseSource {
 public:
  explicit NoiseSource(std::uint64_t seed) : seed_(seed) {}

  std::uint64_t seed() const { return seed_; }

  /// Standard normal number `lane` for the given (replication, agent, step).
  double normal(std::uint32_t replication, std::uint32_t agent, std::uint32_t step,
                std::uint32_t lane) const;

  /// Uniform on (0, 1] from an independent stream (lane space offset by 2^31).
  double uniform(std::uint32_t replication, std::uint32_t agent, std::uint32_t step,
                 std::uint32_t lane) const;

  /// Brownian increments sqrt(dt) * N(0, I) of width n2 for every grid step.
  WhiteNoisePath brownian(std::uint32_t replication, std::uint32_t agent, int n2,
                          const TimeGrid& grid) const;

  /// Standard normal vector of length n (used for random initial states; step slot 2^32-1).
  Vector normal_vector(std::uint32_t replication, std::uint32_t agent, int n) const;

 private:
  PhiloxCounter block(std::uint32_t replication, std::uint32_t agent, std::uint32_t step,
                      std::uint32_t lane_block) const;
  std::uint64_t seed_;
};

}  // namespace rmfg
