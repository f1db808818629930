#include <doctest.h>

#include <cmath>
#include <sstream>

#include "stylegraph/error.hpp"
#include "stylegraph/synthgen.hpp"

using namespace stylegraph;

TEST_SUITE("synthgen") {
  TEST_CASE("single vehicle drives straight at constant speed") {
    GeneratorParams p;
    p.n_vehicles = 1;
    const auto ep = simulate(p, 100);
    REQUIRE(ep.trajectories.agent_count() == 1);
    CHECK(ep.truth.label_of(kSubjectId) == BehaviorLabel::kConservative);
    CHECK(ep.truth.maneuvers.empty());
    const auto track = ep.trajectories.track(0);
    REQUIRE(track.size() == 100);
    const double dx = track[1].pos.x - track[0].pos.x;
    for (std::size_t k = 1; k < track.size(); ++k) {
      CHECK(track[k].pos.y == track[0].pos.y);
      CHECK(track[k].pos.x - track[k - 1].pos.x == doctest::Approx(dx).epsilon(1e-12));
    }
    CHECK(dx * p.frame_rate == doctest::Approx(p.desired_speed));
  }

  TEST_CASE("truth echoes the script") {
    GeneratorParams p;
    p.seed = 3;
    p.script.push_back({StyleKind::kOvertaking, 40, 30, 0.0, 1});
    const auto ep = simulate(p, 120);
    const auto m = ep.truth.maneuvers_of(kSubjectId, StyleKind::kOvertaking);
    REQUIRE(m.size() == 1);
    CHECK(m[0].peak == 40);
    CHECK(m[0].start < 40);
    CHECK(m[0].end > 40);
    CHECK(ep.truth.label_of(kSubjectId) == BehaviorLabel::kAggressive);
    CHECK_THROWS_AS(ep.truth.label_of("nobody"), LookupError);
  }

  TEST_CASE("simulation is deterministic in its params") {
    auto p = preset_params("aggressive");
    p.seed = 12;
    const auto a = simulate(p, 200);
    const auto b = simulate(p, 200);
    CHECK(a.trajectories == b.trajectories);
    p.seed = 13;
    CHECK_FALSE(simulate(p, 200).trajectories == a.trajectories);
  }

  TEST_CASE("scripted scenes keep vehicles apart") {
    for (auto style : {StyleKind::kOverspeeding, StyleKind::kOvertaking, StyleKind::kSuddenLaneChange,
                       StyleKind::kWeaving, StyleKind::kConservative}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto ep = scripted_episode(style, seed);
        CHECK(ep.truth.collisions == 0);
        if (style != StyleKind::kConservative) CHECK_FALSE(ep.truth.maneuvers_of(kSubjectId, style).empty());
      }
    }
    CHECK_THROWS_AS(score_scene(StyleKind::kConservative, 0, {}, {}), TypeError);
  }

  TEST_CASE("parameter validation") {
    GeneratorParams p;
    CHECK_THROWS_AS(simulate(p, 10), DomainError);
    p.lanes = 1;
    CHECK_THROWS_AS(simulate(p, 100), DomainError);
    p = {};
    p.speed_spread = -1.0;
    CHECK_THROWS_AS(simulate(p, 100), DomainError);
    p = {};
    p.initial_gap = 1.0;
    CHECK_THROWS_AS(simulate(p, 100), PlacementError);
    CHECK_THROWS_AS(preset_params("reckless"), DomainError);
  }

  TEST_CASE("params json round trip") {
    auto p = preset_params("aggressive");
    p.script.push_back({StyleKind::kWeaving, 150, 60, 1.5, 0});
    p.seed = 99;
    const auto back = params_from_json(params_to_json(p));
    CHECK(params_to_json(back) == params_to_json(p));
    CHECK(simulate(back, 200).trajectories == simulate(p, 200).trajectories);

    CHECK(params_from_json("{\"lanes\": 3}").lanes == 3);
    CHECK_THROWS_AS(params_from_json("{\"wings\": 2}"), ConfigError);
    CHECK_THROWS_AS(params_from_json("{\"lanes\": \"three\"}"), ConfigError);
    CHECK_THROWS_AS(params_from_json("{lanes"), ParseError);
  }

  TEST_CASE("truth csv") {
    GeneratorParams p;
    p.script.push_back({StyleKind::kSuddenLaneChange, 60, 16, 0.0, 1});
    const auto ep = simulate(p, 120);
    std::ostringstream out;
    write_truth_csv(out, ep.truth);
    const auto text = out.str();
    CHECK(text.find("ego,aggressive") != std::string::npos);
    CHECK(text.find("ego,sudden_lane_change,") != std::string::npos);
  }

  TEST_CASE("calibration toward conservative calms the driver") {
    const auto start = preset_params("aggressive");
    const auto r = calibrate({BehaviorLabel::kConservative, 1e-3}, start, 30, 300, 5, {});
    CHECK(r.converged);
    CHECK(r.achieved.sle_max <= 1e-3);
    CHECK(r.achieved.weaving_points == 0.0);
    CHECK(r.params.lane_change_rate <= start.lane_change_rate);
    CHECK(r.params.speed_spread <= start.speed_spread);
  }

  TEST_CASE("calibrated aggressive params hold on unseen seeds") {
    auto start = preset_params("aggressive");
    const auto r = calibrate({BehaviorLabel::kAggressive, 1.5e-3}, start, 30, 300, 5, {});
    CHECK(r.converged);
    int above = 0;
    for (std::uint64_t seed = 1000; seed < 1010; ++seed) {
      auto p = r.params;
      p.seed = seed;
      above += measure(p, 300, 1, {}).sle_max > 1e-3;
    }
    CHECK(above >= 9);
  }

  TEST_CASE("calibration preconditions") {
    CHECK_THROWS_AS(calibrate({BehaviorLabel::kConservative, 1e-3}, {}, 0, 300, 5, {}), DomainError);
    GeneratorParams impossible;
    impossible.n_vehicles = 1;
    try {
      calibrate({BehaviorLabel::kAggressive, 1e9}, impossible, 2, 100, 1, {});
      FAIL("expected a calibration failure");
    } catch (const CalibrationFailure& f) {
      CHECK_FALSE(f.best().converged);
      CHECK(f.best().iterations <= 2);
      CHECK(f.code() == ErrorCode::kCalibration);
    }
  }

  TEST_CASE("synthetic dataset is labeled from truth") {
    const auto data = synthetic_dataset(20, 4, 300, {}, FeatureLayout::kExtended);
    REQUIRE(data.size() == 20);
    std::size_t agg = 0;
    for (const auto& s : data) {
      CHECK(s.features.size() == 11);
      agg += s.label == BehaviorLabel::kAggressive;
    }
    CHECK(agg == 10);
    CHECK(samples_to_csv(synthetic_dataset(20, 4, 300, {}, FeatureLayout::kExtended)) == samples_to_csv(data));
  }
}
