#include <doctest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "stylegraph/error.hpp"
#include "stylegraph/styles.hpp"
#include "stylegraph/synthgen.hpp"

using namespace stylegraph;

namespace {

CentralityPolynomial poly(CentralityKind kind, std::vector<double> beta, FrameIndex t0, FrameIndex t1) {
  CentralityPolynomial p;
  p.kind = kind;
  p.degree = static_cast<int>(beta.size()) - 1;
  p.beta = std::move(beta);
  p.t_start = t0;
  p.t_end = t1;
  return p;
}

CentralitySeries closeness_of(std::vector<double> values) {
  CentralitySeries s;
  s.kind = CentralityKind::kCloseness;
  s.t_end = static_cast<FrameIndex>(values.size()) - 1;
  s.values = std::move(values);
  return s;
}

}  // namespace

TEST_SUITE("styles") {
  TEST_CASE("likelihood and intensity of fixed polynomials") {
    const auto flat = style_likelihood(poly(CentralityKind::kDegree, {3.0, 0.0, 0.0}, 0, 10), StyleKind::kOverspeeding);
    CHECK(flat.max == 0.0);
    for (double v : flat.values) CHECK(v == 0.0);

    const auto sq = style_likelihood(poly(CentralityKind::kDegree, {0.0, 0.0, 1.0}, 0, 10), StyleKind::kOverspeeding);
    REQUIRE(sq.values.size() == 11);
    for (std::size_t t = 0; t <= 10; ++t) CHECK(sq.values[t] == 2.0 * static_cast<double>(t));
    CHECK(sq.max == 20.0);
    CHECK(sq.t_max == 10);

    const auto sie = style_intensity(poly(CentralityKind::kCloseness, {0.4, -0.3, -0.25}, 5, 9), StyleKind::kOvertaking);
    for (double v : sie) CHECK(v == 0.5);
    const auto lin = style_intensity(poly(CentralityKind::kCloseness, {0.4, -0.3}, 5, 9), StyleKind::kOvertaking);
    for (double v : lin) CHECK(v == 0.0);

    CHECK_THROWS_AS(style_likelihood(poly(CentralityKind::kCloseness, {0, 1}, 0, 3), StyleKind::kOverspeeding),
                    TypeError);
    CHECK_THROWS_AS(style_likelihood(poly(CentralityKind::kCloseness, {0, 1}, 0, 3), StyleKind::kWeaving), TypeError);
    CHECK_THROWS_AS(style_centrality(StyleKind::kConservative), TypeError);
    CHECK(style_centrality(StyleKind::kOverspeeding) == CentralityKind::kDegree);
    CHECK(style_centrality(StyleKind::kSuddenLaneChange) == CentralityKind::kCloseness);
    CHECK(parse_style_kind("sudden_lane_change") == StyleKind::kSuddenLaneChange);
    CHECK_THROWS_AS(parse_style_kind("tailgating"), DomainError);
  }

  TEST_CASE("weaving critical points of a sine") {
    std::vector<double> v(60);
    for (std::size_t t = 0; t < v.size(); ++t) v[t] = std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / 20.0);
    const auto pts = detect_weaving(closeness_of(v), {});
    REQUIRE(pts.size() == 6);
    for (std::size_t k = 0; k < pts.size(); ++k) CHECK(std::abs(pts[k].t - (5.0 + 10.0 * k)) <= 2.0);
    for (std::size_t k = 1; k < pts.size(); ++k) CHECK(pts[k].t > pts[k - 1].t);
  }

  TEST_CASE("flat and monotone series have no critical points") {
    CHECK(detect_weaving(closeness_of(std::vector<double>(50, 0.3)), {}).empty());
    std::vector<double> ramp(50);
    for (std::size_t t = 0; t < ramp.size(); ++t) ramp[t] = 0.01 * static_cast<double>(t);
    CHECK(detect_weaving(closeness_of(ramp), {}).empty());

    CentralitySeries deg = closeness_of(ramp);
    deg.kind = CentralityKind::kDegree;
    CHECK_THROWS_AS(detect_weaving(deg, {}), TypeError);
    CHECK_THROWS_AS(detect_weaving(closeness_of({1, 2}), {}), DomainError);
  }

  TEST_CASE("conservative threshold is inclusive") {
    StyleReport r;
    r.curves.resize(3);
    CHECK(classify_conservative(r, 0.0));
    r.curves[1].sle_max = 0.25;
    CHECK(classify_conservative(r, 0.25));
    CHECK_FALSE(classify_conservative(r, 0.2499));
    r.curves[1].sle_max = 0.0;
    r.critical_points.push_back({10.0, 0.1});
    CHECK_FALSE(classify_conservative(r, 1.0));
  }

  TEST_CASE("stationary agent is conservative") {
    std::string csv;
    for (int t = 0; t < 40; ++t) csv += std::to_string(t) + ",solo,car,5,5\n";
    const auto ts = parse_trajectory_csv(csv, 10.0);
    const auto r = style_report(ts, 0, {});
    CHECK(r.conservative);
    CHECK(r.sle_max() == 0.0);
    CHECK(r.critical_points.empty());
  }

  TEST_CASE("overspeeder outscores uniform traffic") {
    int wins = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
      const auto ep = scripted_episode(StyleKind::kOverspeeding, seed);
      const EpisodeAnalysis a(ep.trajectories, {});
      const auto ego = a.report(ep.trajectories.index_of(kSubjectId), 0.0);
      const auto other = a.report(ep.trajectories.index_of("v01"), 0.0);
      wins += ego.curve(StyleKind::kOverspeeding).sle_max > other.curve(StyleKind::kOverspeeding).sle_max;
      if (seed < 3) CHECK_FALSE(classify_conservative(ego, 1e-3));
    }
    CHECK(wins >= 95);
  }

  TEST_CASE("harsher lane changes raise intensity") {
    double ratio = 0.0;
    int counted = 0;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      double sie[2];
      for (int k = 0; k < 2; ++k) {
        GeneratorParams p;
        p.lanes = 3;
        p.n_vehicles = 7;
        p.lane_change_rate = 2.0;
        p.lateral_jerk_scale = k == 0 ? 1.0 : 3.0;
        p.seed = seed;
        const auto ep = simulate(p, 300);
        const auto r = style_report(ep.trajectories, ep.trajectories.index_of(kSubjectId), {});
        sie[k] = r.curve(StyleKind::kSuddenLaneChange).sie_max;
      }
      if (sie[0] > 0.0) {
        ratio += sie[1] / sie[0];
        ++counted;
      }
    }
    REQUIRE(counted > 10);
    CHECK(ratio / counted > 1.0);
  }

  TEST_CASE("scripted lane change is timed within a second") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      GeneratorParams p;
      p.lanes = 2;
      p.n_vehicles = 5;
      p.clear_subject_lane = true;
      p.initial_gap = 30.0;
      p.subject_offset = 21.5;
      p.seed = seed;
      p.script.push_back({StyleKind::kSuddenLaneChange, 30, 16, 0.0, 1});
      const auto ep = simulate(p, 80);
      const auto truth = ep.truth.maneuvers_of(kSubjectId, StyleKind::kSuddenLaneChange);
      REQUIRE(truth.size() == 1);
      CHECK(truth[0].peak == 30);
      const auto r = style_report(ep.trajectories, ep.trajectories.index_of(kSubjectId), {});
      CHECK(std::abs(r.curve(StyleKind::kSuddenLaneChange).t_sle - 30) <= 10);
    }
  }

  TEST_CASE("analysis is deterministic") {
    const auto ep = scripted_episode(StyleKind::kWeaving, 4);
    AnalysisConfig c;
    c.series_noise = 1e-3;
    c.seed = 9;
    const auto a = reports_to_json(analyze_episode(ep.trajectories, c));
    c.jobs = 4;
    CHECK(reports_to_json(analyze_episode(ep.trajectories, c)) == a);
  }
}
