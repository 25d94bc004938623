#include "rmfg/noise.hpp"

#include <cmath>
#include <numbers>

namespace rmfg {

namespace {

constexpr std::uint32_t kM0 = 0xD2511F53u;
constexpr std::uint32_t kM1 = 0xCD9E8D57u;
constexpr std::uint32_t kW0 = 0x9E3779B9u;
constexpr std::uint32_t kW1 = 0xBB67AE85u;

inline void mulhilo(std::uint32_t a, std::uint32_t b, std::uint32_t& hi, std::uint32_t& lo) {
  const std::uint64_t p = static_cast<std::uint64_t>(a) * b;
  hi = static_cast<std::uint32_t>(p >> 32);
  lo = static_cast<std::uint32_t>(p);
}

inline double to_unit(std::uint32_t a, std::uint32_t b) {
  // 53 random bits, mapped to (0, 1].
  const std::uint64_t bits = (static_cast<std::uint64_t>(a >> 5) << 26) | (b >> 6);
  return (static_cast<double>(bits) + 1.0) * 0x1.0p-53;
}

}  // namespace

PhiloxCounter philox4x32_10(PhiloxCounter ctr, PhiloxKey key) {
  for (int round = 0; round < 10; ++round) {
    if (round > 0) {
      key[0] += kW0;
      key[1] += kW1;
    }
    std::uint32_t hi0, lo0, hi1, lo1;
    mulhilo(kM0, ctr[0], hi0, lo0);
    mulhilo(kM1, ctr[2], hi1, lo1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
  }
  return ctr;
}

PhiloxCounter NoiseSource::block(std::uint32_t replication, std::uint32_t agent,
                                 std::uint32_t step, std::uint32_t lane_block) const {
  const PhiloxKey key{static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)};
  return philox4x32_10({step, lane_block, agent, replication}, key);
}

double NoiseSource::normal(std::uint32_t replication, std::uint32_t agent, std::uint32_t step,
                           std::uint32_t lane) const {
  const auto r = block(replication, agent, step, lane / 2);
  const double u1 = to_unit(r[0], r[1]);
  const double u2 = to_unit(r[2], r[3]);
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * std::numbers::pi * u2;
  return (lane % 2 == 0) ? rad * std::cos(ang) : rad * std::sin(ang);
}

double NoiseSource::uniform(std::uint32_t replication, std::uint32_t agent, std::uint32_t step,
                            std::uint32_t lane) const {
  const auto r = block(replication, agent, step, 0x80000000u | lane);
  return to_unit(r[0], r[1]);
}

WhiteNoisePath NoiseSource::brownian(std::uint32_t replication, std::uint32_t agent, int n2,
                                     const TimeGrid& grid) const {
  WhiteNoisePath path;
  path.increments.resize(n2, grid.n_steps());
  const double sq = std::sqrt(grid.dt());
  for (int k = 0; k < grid.n_steps(); ++k) {
    for (int l = 0; l < n2; l += 2) {
      const auto r = block(replication, agent, static_cast<std::uint32_t>(k),
                           static_cast<std::uint32_t>(l / 2));
      const double rad = std::sqrt(-2.0 * std::log(to_unit(r[0], r[1])));
      const double ang = 2.0 * std::numbers::pi * to_unit(r[2], r[3]);
      path.increments(l, k) = sq * rad * std::cos(ang);
      if (l + 1 < n2) path.increments(l + 1, k) = sq * rad * std::sin(ang);
    }
  }
  return path;
}

Vector NoiseSource::normal_vector(std::uint32_t replication, std::uint32_t agent, int n) const {
  Vector v(n);
  for (int l = 0; l < n; ++l) v(l) = normal(replication, agent, 0xFFFFFFFFu, static_cast<std::uint32_t>(l));
  return v;
}

}  // namespace rmfg
