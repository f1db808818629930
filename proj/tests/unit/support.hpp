#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "stylegraph/io.hpp"

namespace testing {

// Random agents on a small plane: each agent is present over one random
// interval and takes integer-valued steps, so speeds come out exact.
inline stylegraph::TrajectorySet random_episode(std::uint64_t seed, std::size_t max_agents, std::int64_t max_frames,
                                                double extent = 30.0) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> n_agents(1, max_agents);
  std::uniform_int_distribution<std::int64_t> n_frames(1, max_frames);
  const auto agents = n_agents(rng);
  const auto frames = n_frames(rng);
  std::uniform_real_distribution<double> coord(0.0, extent);
  std::uniform_int_distribution<int> step(-2, 2);
  std::vector<stylegraph::TrajectoryPoint> points;
  for (std::size_t a = 0; a < agents; ++a) {
    std::uniform_int_distribution<std::int64_t> pick(0, frames - 1);
    auto t0 = pick(rng);
    auto t1 = pick(rng);
    if (t0 > t1) std::swap(t0, t1);
    double x = std::round(coord(rng));
    double y = std::round(coord(rng));
    for (std::int64_t t = t0; t <= t1; ++t) {
      points.push_back({t, "a" + std::to_string(a), stylegraph::AgentType::kCar, x, y});
      x += step(rng);
      y += step(rng);
    }
  }
  return stylegraph::TrajectorySet::from_points(points, 1.0);
}

}  // namespace testing
