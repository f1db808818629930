#include <doctest.h>

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "oracles.hpp"
#include "stylegraph/centrality.hpp"
#include "stylegraph/error.hpp"
#include "stylegraph/graph.hpp"
#include "support.hpp"

using namespace stylegraph;

namespace {

GraphSnapshot snapshot_of(const std::vector<Vec2>& positions, double mu) {
  std::vector<Observation> obs;
  for (AgentIndex a = 0; a < positions.size(); ++a) obs.push_back({a, positions[a]});
  return build_snapshot(obs, mu, 0);
}

}  // namespace

TEST_SUITE("centrality") {
  TEST_CASE("collinear closeness by hand") {
    const auto g = snapshot_of({{0, 0}, {5, 0}, {10, 0}}, 6.0);
    CHECK(closeness(g, 1) == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(closeness(g, 0) == doctest::Approx(2.0 / 15.0).epsilon(1e-15));
    CHECK(closeness(g, 2) == doctest::Approx(2.0 / 15.0).epsilon(1e-15));

    const auto split = snapshot_of({{0, 0}, {5, 0}, {100, 0}}, 6.0);
    // one of two others reachable: (1/2) * 1/5
    CHECK(closeness(split, 0) == doctest::Approx(0.1).epsilon(1e-15));
    CHECK(closeness(split, 2) == 0.0);
    CHECK(closeness(split, 7) == 0.0);
  }

  TEST_CASE("shortest paths against Floyd-Warshall") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> coord(0.0, 25.0);
    for (int trial = 0; trial < 100; ++trial) {
      std::vector<Vec2> pos(1 + trial % 10);
      for (auto& p : pos) p = {coord(rng), coord(rng)};
      const auto g = snapshot_of(pos, 10.0);
      const auto d = testing::all_pairs(g, pos.size());
      for (AgentIndex a = 0; a < pos.size(); ++a) {
        const auto sp = shortest_path_lengths(g, a);
        for (AgentIndex b = 0; b < pos.size(); ++b) {
          if (std::isinf(d[a][b])) {
            CHECK(std::isinf(sp[b]));
          } else {
            CHECK(sp[b] == doctest::Approx(d[a][b]).epsilon(1e-12));
          }
        }
        CHECK(closeness(g, a) == doctest::Approx(testing::closeness_oracle(g, a, pos.size())).epsilon(1e-12));
      }
    }
  }

  TEST_CASE("lone vehicle has zero centralities") {
    const auto ts = parse_trajectory_csv("0,a,car,0,0\n1,a,car,3,0\n2,a,car,6,0\n3,a,car,9,0\n", 1.0);
    const auto states = replay_adjacency(ts, {});
    const auto deg = degree_series(states, 0);
    CHECK(deg.values == std::vector<double>(4, 0.0));
    const auto clo = closeness_series(ts, 10.0, 0, 0, 3);
    CHECK(clo.values == std::vector<double>(4, 0.0));
    CHECK_THROWS_AS(closeness_series(ts, 10.0, 0, 0, 9), RangeError);
    CHECK_THROWS_AS(closeness_series(ts, 10.0, 4, 0, 3), LookupError);
  }

  TEST_CASE("passing slower vehicles steps the degree") {
    // Fast agent at x = 10t; parked agents sit 5 m past the point reached
    // at frames 2, 5 and 9, so each first falls within 10 m on that frame.
    std::vector<TrajectoryPoint> points;
    for (FrameIndex t = 0; t <= 12; ++t) {
      points.push_back({t, "fast", AgentType::kCar, 10.0 * static_cast<double>(t), 0.0});
      for (int k : {2, 5, 9}) {
        points.push_back({t, "p" + std::to_string(k), AgentType::kCar, 10.0 * k + 5.0, 0.0});
      }
    }
    const auto ts = TrajectorySet::from_points(points, 1.0);
    const auto states = replay_adjacency(ts, {});
    const auto deg = degree_series(states, ts.index_of("fast"));
    const std::vector<double> expected{0, 0, 1, 1, 1, 2, 2, 2, 2, 3, 3, 3, 3};
    CHECK(deg.values == expected);
  }

  TEST_CASE("degree is non-decreasing within an epoch") {
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
      const auto ts = testing::random_episode(seed, 10, 60);
      const auto states = replay_adjacency(ts, {10.0, 1000, 10});
      for (AgentIndex a = 0; a < ts.agent_count(); ++a) {
        const auto [t0, t1] = ts.longest_presence(a);
        const std::span<const AdjacencyState> window(states.data() + (t0 - ts.first_frame()),
                                                     static_cast<std::size_t>(t1 - t0 + 1));
        const auto s = degree_series(window, a);
        for (std::size_t k = 1; k < s.size(); ++k) {
          if (window[k].epoch() == window[k - 1].epoch()) CHECK(s.values[k] >= s.values[k - 1]);
        }
      }
    }
  }

  TEST_CASE("closeness rises toward the platoon center") {
    // 2 x 2 lattice plus a center vehicle; the mover slides in from the edge.
    const std::vector<Vec2> lattice{{0, 0}, {16, 0}, {0, 7}, {16, 7}, {8, 3.5}};
    std::vector<TrajectoryPoint> points;
    for (FrameIndex t = 0; t <= 10; ++t) {
      for (std::size_t k = 0; k < lattice.size(); ++k) {
        points.push_back({t, "l" + std::to_string(k), AgentType::kCar, lattice[k].x, lattice[k].y});
      }
      points.push_back({t, "m", AgentType::kCar, -2.0 + 0.6 * static_cast<double>(t), 3.5});
    }
    const auto ts = TrajectorySet::from_points(points, 1.0);
    const auto m = ts.index_of("m");
    const auto s = closeness_series(ts, 10.0, m, 0, 10);
    for (FrameIndex t = 0; t <= 10; ++t) {
      const auto g = build_snapshot(ts.at(t), 10.0, t);
      CHECK(s.values[static_cast<std::size_t>(t)] ==
            doctest::Approx(testing::closeness_oracle(g, m, ts.agent_count())).epsilon(1e-12));
      if (t > 0) CHECK(s.values[static_cast<std::size_t>(t)] > s.values[static_cast<std::size_t>(t - 1)]);
    }
  }
}
