#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "stylegraph/classify.hpp"
#include "stylegraph/error.hpp"
#include "stylegraph/synthgen.hpp"

using namespace stylegraph;

namespace {

const auto kAgg = BehaviorLabel::kAggressive;
const auto kCons = BehaviorLabel::kConservative;

// Two Gaussian blobs separated along the diagonal.
std::vector<Sample> blobs(std::size_t n, std::uint64_t seed, std::size_t dim = 2) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 0.3);
  std::vector<Sample> out;
  for (std::size_t i = 0; i < n; ++i) {
    Sample s;
    s.label = i % 2 ? kAgg : kCons;
    const double c = i % 2 ? 1.0 : -1.0;
    for (std::size_t k = 0; k < dim; ++k) s.features.push_back(c + g(rng));
    out.push_back(s);
  }
  return out;
}

double accuracy(const Model& m, const std::vector<Sample>& data) {
  std::vector<BehaviorLabel> p, l;
  for (const auto& s : data) {
    p.push_back(predict(m, s.features).label);
    l.push_back(s.label);
  }
  return weighted_accuracy(p, l);
}

}  // namespace

TEST_SUITE("classify") {
  TEST_CASE("feature layouts") {
    CHECK(feature_length(FeatureLayout::kCoefficients, 2) == 6);
    CHECK(feature_length(FeatureLayout::kExtended, 2) == 11);
    CHECK(feature_length(FeatureLayout::kCoefficients, 3) == 8);

    const auto ep = scripted_episode(StyleKind::kWeaving, 2);
    const EpisodeAnalysis a(ep.trajectories, {});
    const auto r = a.report(0, 0.0);
    const auto f = extract_features(r, FeatureLayout::kExtended);
    REQUIRE(f.size() == 11);
    CHECK(f[6] == r.curve(StyleKind::kOverspeeding).sle_max);
    CHECK(f[9] == r.weaving_sie_max());
    CHECK(f[10] == static_cast<double>(r.critical_points.size()));
    CHECK(extract_features(a.report(0, 0.0), FeatureLayout::kExtended) == f);
    const auto c = extract_features(r, FeatureLayout::kCoefficients);
    CHECK(std::vector<double>(f.begin(), f.begin() + 6) == c);

    StyleReport empty;
    CHECK_THROWS_AS(extract_features(empty, FeatureLayout::kCoefficients), IncompleteInputError);
  }

  TEST_CASE("separable toy set is learned") {
    const auto data = blobs(20, 1);
    TrainConfig c;
    c.learning_rate = 0.1;
    c.epochs = 500;
    const auto m = train(data, c, FeatureLayout::kCoefficients);
    CHECK(accuracy(m, data) == 1.0);
    CHECK(m.loss_trace.size() == 501);
    CHECK(m.loss_trace.back() < m.loss_trace.front());

    c.model = ModelKind::kLogistic;
    const auto lr = train(data, c, FeatureLayout::kCoefficients);
    CHECK(accuracy(lr, data) == 1.0);
    CHECK(lr.layers.size() == 1);
  }

  TEST_CASE("zero epochs keep the seeded initialization") {
    const auto data = blobs(10, 2);
    TrainConfig c;
    c.epochs = 0;
    c.seed = 77;
    const auto m = train(data, c);
    const auto init = init_model(2, c);
    CHECK(flatten_parameters(m) == flatten_parameters(init));
    CHECK(flatten_parameters(init_model(2, c)) == flatten_parameters(init));
    c.seed = 78;
    CHECK_FALSE(flatten_parameters(init_model(2, c)) == flatten_parameters(init));
  }

  TEST_CASE("duplicating the dataset leaves the fit unchanged") {
    const auto data = blobs(16, 3, 4);
    auto twice = data;
    twice.insert(twice.end(), data.begin(), data.end());
    for (auto kind : {ModelKind::kPerceptron, ModelKind::kLogistic}) {
      TrainConfig c;
      c.model = kind;
      c.epochs = 200;
      c.learning_rate = 0.05;
      const auto a = flatten_parameters(train(data, c));
      const auto b = flatten_parameters(train(twice, c));
      REQUIRE(a.size() == b.size());
      for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-9));
    }
  }

  TEST_CASE("argmax with ties to conservative") {
    TrainConfig c;
    c.model = ModelKind::kLogistic;
    auto m = init_model(2, c);
    m.layers[0].weights.setZero();
    m.layers[0].bias << 2.0, -2.0;
    const std::vector<double> x{0.5, 0.5};
    CHECK(predict(m, x).label == kAgg);
    m.layers[0].bias << 0.0, 0.0;
    const auto tie = predict(m, x);
    CHECK(tie.scores[0] == tie.scores[1]);
    CHECK(tie.label == kCons);
    CHECK_THROWS_AS(predict(m, std::vector<double>{1.0}), TypeError);
  }

  TEST_CASE("analytic gradient matches finite differences") {
    const auto data = blobs(12, 4, 5);
    for (auto kind : {ModelKind::kPerceptron, ModelKind::kLogistic}) {
      for (std::uint64_t seed = 0; seed < 5; ++seed) {
        TrainConfig c;
        c.model = kind;
        c.seed = seed;
        c.hidden = 8;
        c.epochs = 20;
        c.learning_rate = 0.05;
        const auto m = train(data, c);
        for (const auto& s : data) CHECK(gradient_check(m, s, 1e-5) < 1e-4);
      }
    }
    TrainConfig c;
    CHECK_THROWS_AS(gradient_check(init_model(5, c), data[0], 0.0), DomainError);
  }

  TEST_CASE("gradient vanishes at an exact fit") {
    TrainConfig c;
    c.model = ModelKind::kLogistic;
    auto m = init_model(2, c);
    m.layers[0].weights.setZero();
    m.layers[0].bias << 40.0, -40.0;
    const std::vector<Sample> fit{{{0.1, 0.2}, kAgg}};
    const auto g = gradient(m, fit);
    double n = 0.0;
    for (double v : g) n += v * v;
    CHECK(std::sqrt(n) < 1e-8);

    TrainConfig p;
    auto mlp = init_model(2, p);
    mlp.layers.back().weights.setZero();
    mlp.layers.back().bias << 40.0, -40.0;
    double np = 0.0;
    for (double v : gradient(mlp, fit)) np += v * v;
    CHECK(std::sqrt(np) < 1e-8);
  }

  TEST_CASE("weighted accuracy") {
    const std::vector<BehaviorLabel> y{kAgg, kAgg, kAgg, kCons};
    CHECK(weighted_accuracy(y, y) == 1.0);
    const std::vector<BehaviorLabel> p{kAgg, kAgg, kCons, kCons};
    CHECK(weighted_accuracy(p, y) == doctest::Approx(0.75));
    const std::vector<BehaviorLabel> wrong{kCons, kCons, kCons, kAgg};
    CHECK(weighted_accuracy(wrong, y) == 0.0);
    CHECK_THROWS_AS(weighted_accuracy(p, std::vector<BehaviorLabel>{kAgg}), DomainError);
    CHECK_THROWS_AS(weighted_accuracy({}, {}), DomainError);
  }

  TEST_CASE("training needs both classes") {
    auto data = blobs(10, 5);
    for (auto& s : data) s.label = kAgg;
    CHECK_THROWS_AS(train(data, {}), DegenerateDatasetError);
    auto one = blobs(10, 5);
    one.resize(3);
    CHECK_THROWS_AS(train(one, {}), DegenerateDatasetError);
  }

  TEST_CASE("standardizer") {
    const std::vector<Sample> data{{{1.0, 5.0}, kAgg}, {{3.0, 5.0}, kCons}};
    const auto st = Standardizer::fit(data);
    CHECK(st.mean == std::vector<double>{2.0, 5.0});
    CHECK(st.scale == std::vector<double>{1.0, 1.0});
    CHECK(st.apply(std::vector<double>{3.0, 7.0}) == std::vector<double>{1.0, 2.0});
    CHECK_THROWS_AS(st.apply(std::vector<double>{1.0}), TypeError);
  }

  TEST_CASE("split is deterministic and disjoint") {
    const auto data = blobs(30, 6);
    const auto a = split_dataset(data, 1.0 / 3.0, 4);
    const auto b = split_dataset(data, 1.0 / 3.0, 4);
    CHECK(a.test.size() == 10);
    CHECK(a.train.size() == 20);
    CHECK(samples_to_csv(a.test) == samples_to_csv(b.test));
    CHECK_THROWS_AS(split_dataset(data, 1.0, 4), DomainError);
  }

  TEST_CASE("sample csv") {
    const auto data = blobs(6, 7, 3);
    const auto back = parse_samples_csv(samples_to_csv(data));
    REQUIRE(back.size() == data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      CHECK(back[i].features == data[i].features);
      CHECK(back[i].label == data[i].label);
    }
    CHECK(parse_samples_csv("aggressive,1,2\nconservative,3,4\n").size() == 2);
    try {
      parse_samples_csv("label,f0,f1\naggressive,1,2\nconservative,3\n");
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(e.line() == 3);
    }
    CHECK_THROWS_AS(parse_samples_csv("label,f0\n"), EmptyInputError);
    CHECK_THROWS_AS(parse_samples_csv("reckless,1\n"), ParseError);
  }

  TEST_CASE("model json round trip") {
    const auto data = blobs(12, 8, 3);
    TrainConfig c;
    c.epochs = 30;
    c.learning_rate = 0.05;
    const auto m = train(data, c, FeatureLayout::kCoefficients);
    const auto back = model_from_json(model_to_json(m));
    CHECK(flatten_parameters(back) == flatten_parameters(m));
    CHECK(back.standardizer.mean == m.standardizer.mean);
    CHECK(back.layout == FeatureLayout::kCoefficients);
    CHECK(model_to_json(back) == model_to_json(m));
    for (const auto& s : data) CHECK(predict(back, s.features).scores == predict(m, s.features).scores);
    CHECK_THROWS_AS(model_from_json("{}"), ParseError);
    CHECK_THROWS_AS(model_from_json("not json"), ParseError);
  }

  TEST_CASE("parallel prediction matches serial") {
    const auto data = blobs(40, 9);
    const auto m = train(data, {});
    const auto one = predict_all(m, data, 1);
    const auto four = predict_all(m, data, 4);
    REQUIRE(one.size() == four.size());
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(one[i].scores == four[i].scores);
  }
}
