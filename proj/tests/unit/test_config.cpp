#include <doctest.h>

#include "stylegraph/config.hpp"
#include "stylegraph/error.hpp"

using namespace stylegraph;

TEST_SUITE("config") {
  TEST_CASE("defaults") {
    const RunConfig c;
    CHECK(c.analysis.mu == 10.0);
    CHECK(c.analysis.capacity == 1000);
    CHECK(c.analysis.degree == 2);
    CHECK(c.analysis.delta == 2.0);
    CHECK(c.analysis.eps_ball == 2.0);
    CHECK(c.frame_rate == 10.0);
    CHECK_NOTHROW(c.validate());
  }

  TEST_CASE("document round trip is lossless") {
    RunConfig c;
    c.analysis.mu = 7.25;
    c.analysis.degree = 3;
    c.analysis.origin = TimeOrigin::kWindowStart;
    c.analysis.conservative_tol = 1.0 / 3.0;
    c.analysis.series_noise = 1e-4;
    c.analysis.jobs = 3;
    c.train.model = ModelKind::kLogistic;
    c.train.learning_rate = 0.0125;
    c.layout = FeatureLayout::kCoefficients;
    c.seed = 1234567890123ull;
    c.input = "ep.csv";
    const auto text = config_to_json(c);
    const auto back = config_from_json(text);
    CHECK(config_to_json(back) == text);
    CHECK(back.analysis.conservative_tol == c.analysis.conservative_tol);
    CHECK(back.seed == c.seed);
    CHECK(config_from_json("{}").analysis.mu == 10.0);
  }

  TEST_CASE("violations name the field") {
    CHECK_THROWS_AS(config_from_json("{\"analysis\": {\"mu\": -1}}"), ConfigError);
    CHECK_THROWS_AS(config_from_json("{\"analysis\": {\"moo\": 1}}"), ConfigError);
    CHECK_THROWS_AS(config_from_json("{\"feature_layout\": \"wide\"}"), ConfigError);
    CHECK_THROWS_AS(config_from_json("{\"train\": {\"model\": \"svm\"}}"), ConfigError);
    CHECK_THROWS_AS(config_from_json("{\"analysis\": {\"delta\": 1.0}}"), ConfigError);
    try {
      config_from_json("{\"analysis\": {\"fit_window\": 2}}");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      CHECK(std::string(e.what()).find("fit_window") != std::string::npos);
    }
  }
}
