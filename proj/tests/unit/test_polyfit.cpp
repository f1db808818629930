#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "stylegraph/centrality.hpp"
#include "stylegraph/error.hpp"
#include "stylegraph/polyfit.hpp"

using namespace stylegraph;

namespace {

CentralitySeries series_from(const std::vector<double>& values, FrameIndex t_start = 0) {
  CentralitySeries s;
  s.kind = CentralityKind::kCloseness;
  s.t_start = t_start;
  s.t_end = t_start + static_cast<FrameIndex>(values.size()) - 1;
  s.values = values;
  return s;
}

std::vector<double> quadratic(double c0, double c1, double c2, std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    v[i] = c0 + c1 * t + c2 * t * t;
  }
  return v;
}

double norm_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

Eigen::VectorXd singular_values(const DesignMatrix& m) {
  return Eigen::JacobiSVD<Eigen::MatrixXd>(m.entries).singularValues();
}

}  // namespace

TEST_SUITE("polyfit") {
  TEST_CASE("Vandermonde layout") {
    const std::vector<double> t{0, 1, 2};
    const auto m = vandermonde(t, 2);
    Eigen::MatrixXd expected(3, 3);
    expected << 1, 0, 0, 1, 1, 1, 1, 2, 4;
    CHECK(m.entries == expected);

    const auto ones = vandermonde(t, 0);
    CHECK(ones.entries.cols() == 1);
    CHECK(ones.entries.isOnes());

    const auto study = vandermonde(window_times(20, TimeOrigin::kWindowStart), 2);
    CHECK(study.entries.rows() == 20);
    CHECK(study.entries.cols() == 3);
    CHECK(study.entries(19, 2) == 361.0);

    const auto centered = window_times(5, TimeOrigin::kWindowCenter);
    CHECK(centered == std::vector<double>{-2, -1, 0, 1, 2});
    CHECK_THROWS_AS(vandermonde({}, 2), DomainError);
    CHECK_THROWS_AS(vandermonde(t, -1), DomainError);
  }

  TEST_CASE("least squares recovers polynomials") {
    const auto p = fit_ols(series_from(quadratic(1, 2, 3, 6)), 2);
    REQUIRE(p.beta.size() == 3);
    CHECK(p.beta[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.beta[1] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(p.beta[2] == doctest::Approx(3.0).epsilon(1e-9));

    const auto c = fit_ols(series_from(std::vector<double>(8, 4.0)), 2);
    CHECK(c.beta[0] == doctest::Approx(4.0));
    CHECK(std::abs(c.beta[1]) < 1e-12);
    CHECK(std::abs(c.beta[2]) < 1e-12);

    CHECK_THROWS_AS(fit_ols(series_from({1.0, 2.0}), 2), DomainError);
    const std::vector<double> repeated{1, 1, 1};
    CHECK_THROWS_AS(solve_ols(vandermonde(repeated, 2), std::vector<double>{1, 2, 3}), SingularError);
  }

  TEST_CASE("OLS noise error stays under the singular value bound") {
    // ||beta_hat - beta|| <= ||e|| / sigma_min(M) with ||e|| <= sqrt(T) eps
    const std::size_t T = 30;
    const double eps = 1e-3;
    const auto truth = quadratic(0.5, 0.02, -0.001, T);
    const auto m = vandermonde(window_times(T, TimeOrigin::kWindowStart), 2);
    const double bound = std::sqrt(static_cast<double>(T)) * eps / singular_values(m).minCoeff();
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(-eps, eps);
    for (int seed = 0; seed < 100; ++seed) {
      auto noisy = truth;
      for (auto& v : noisy) v += u(rng);
      const auto b = fit_ols(series_from(noisy), 2).beta;
      CHECK(norm_diff(b, {0.5, 0.02, -0.001}) <= bound);
    }
  }

  TEST_CASE("Tikhonov limits") {
    const auto s = series_from(quadratic(0.3, 0.1, 0.01, 15));
    const auto ols = fit_ols(s, 2);
    const auto zero = fit_tikhonov(s, 2, 0.0);
    CHECK(zero.beta == ols.beta);

    double last = std::numeric_limits<double>::infinity();
    for (double alpha : {1e-3, 1e-2, 0.1, 1.0, 10.0, 100.0, 1e3, 1e6, 1e9}) {
      const auto b = fit_tikhonov(s, 2, alpha).beta;
      const double n = norm_diff(b, {0, 0, 0});
      CHECK(n <= last);
      last = n;
    }
    CHECK(last < 1e-12);
    CHECK_THROWS_AS(fit_tikhonov(s, 2, -1.0), DomainError);
  }

  TEST_CASE("Tikhonov matches the normal equations") {
    const auto values = quadratic(0.2, -0.05, 0.004, 12);
    for (double alpha : {0.5, 3.0, 40.0}) {
      for (auto origin : {TimeOrigin::kWindowStart, TimeOrigin::kWindowCenter}) {
        const auto m = vandermonde(window_times(values.size(), origin), 2);
        const Eigen::Map<const Eigen::VectorXd> y(values.data(), static_cast<Eigen::Index>(values.size()));
        const Eigen::MatrixXd lhs = m.entries.transpose() * m.entries + alpha * alpha * Eigen::MatrixXd::Identity(3, 3);
        const Eigen::VectorXd ref = lhs.ldlt().solve(m.entries.transpose() * y);
        const auto b = solve_tikhonov(m, values, alpha);
        for (int k = 0; k < 3; ++k) CHECK(b[k] == doctest::Approx(ref(k)).epsilon(1e-9));
      }
    }
  }

  TEST_CASE("regularized noise error stays under the filter bound") {
    // ||beta_eps - beta_0|| <= ||e|| * max sigma / (sigma^2 + alpha^2)
    const std::size_t T = 20;
    const double alpha = select_alpha(T, 2, 2.0);
    const auto m = vandermonde(window_times(T, TimeOrigin::kWindowStart), 2);
    const auto sv = singular_values(m);
    double gain = 0.0;
    for (Eigen::Index k = 0; k < sv.size(); ++k) gain = std::max(gain, sv(k) / (sv(k) * sv(k) + alpha * alpha));
    const auto clean = quadratic(0.1, 0.01, 0.0005, T);
    const auto base = fit_tikhonov(series_from(clean), 2, alpha).beta;
    std::mt19937_64 rng(8);
    for (double eps : {1e-4, 1e-3, 1e-2}) {
      std::uniform_real_distribution<double> u(-eps, eps);
      for (int seed = 0; seed < 100; ++seed) {
        auto noisy = clean;
        for (auto& v : noisy) v += u(rng);
        const auto b = fit_tikhonov(series_from(noisy), 2, alpha).beta;
        CHECK(norm_diff(b, base) <= std::sqrt(static_cast<double>(T)) * eps * gain);
      }
    }
  }

  TEST_CASE("condition numbers") {
    DesignMatrix id{Eigen::MatrixXd::Identity(3, 3), 2};
    CHECK(condition_number(id, 0.0) == doctest::Approx(1.0));

    double last = 0.0;
    for (std::size_t T = 3; T <= 20; ++T) {
      const double k = condition_number(vandermonde(window_times(T, TimeOrigin::kWindowStart), 2), 0.0);
      CHECK(k > last);
      last = k;
    }

    const auto m = vandermonde(window_times(12, TimeOrigin::kWindowStart), 2);
    double prev = condition_number(m, 0.0);
    for (double alpha = 0.01; alpha < 1e7; alpha *= 3.0) {
      const double k = condition_number(m, alpha);
      CHECK(k <= prev);
      CHECK(k >= 1.0);
      prev = k;
    }
    CHECK(prev == doctest::Approx(1.0).epsilon(1e-6));

    const std::vector<double> repeated{2, 2, 2};
    CHECK(std::isinf(condition_number(vandermonde(repeated, 2), 0.0)));
  }

  TEST_CASE("alpha selection") {
    CHECK(select_alpha(5, 0, 2.0) == 0.0);

    const double a = select_alpha(20, 2, 2.0);
    const auto m = vandermonde(window_times(20, TimeOrigin::kWindowStart), 2);
    CHECK(a > 0.0);
    CHECK(condition_number(m, a) <= 2.0);
    CHECK(condition_number(m, a / 10.0) > 2.0);
    // one grid step down already fails
    CHECK(condition_number(m, a / std::pow(10.0, 1.0 / 16.0)) > 2.0);

    for (std::size_t T : {3u, 8u, 20u, 60u}) {
      CHECK(select_alpha(T, 2, 4.0) <= select_alpha(T, 2, 2.0));
      CHECK(select_alpha(T, 2, 2.0) <= select_alpha(T, 2, 1.5));
    }
    CHECK_THROWS_AS(select_alpha(20, 2, 1.0), DomainError);

    const auto rows = condition_study(2, 3, 20, 2.0);
    REQUIRE(rows.size() == 18);
    for (const auto& r : rows) CHECK(r.kappa_alpha <= 2.0);
    CHECK_THROWS_AS(condition_study(2, 0, 20, 2.0), DomainError);
    CHECK_THROWS_AS(condition_study(2, 9, 5, 2.0), DomainError);
  }

  TEST_CASE("polynomial evaluation") {
    CentralityPolynomial p;
    p.beta = {1, 2, 3};
    p.degree = 2;
    CHECK(eval_poly(p, 2.0, 0) == 17.0);  // 1 + 4 + 12
    CHECK(eval_poly(p, 2.0, 1) == 14.0);
    CHECK(eval_poly(p, 2.0, 2) == 6.0);
    CHECK(eval_poly(p, 2.0, 3) == 0.0);
    for (double t : {-3.0, 0.0, 7.5}) CHECK(eval_poly(p, t, 2) == 6.0);

    p.origin = 10.0;
    CHECK(eval_poly(p, 12.0, 0) == 17.0);
    CHECK_THROWS_AS(eval_poly(p, 0.0, -1), DomainError);

    CentralityPolynomial cubic;
    cubic.beta = {0.3, -1.2, 0.05, 0.002};
    cubic.degree = 3;
    cubic.origin = 4.0;
    const double h = 1e-4;
    for (double t : {0.0, 3.3, 11.0}) {
      const double fd1 = (eval_poly(cubic, t + h, 0) - eval_poly(cubic, t - h, 0)) / (2 * h);
      const double fd2 = (eval_poly(cubic, t + h, 1) - eval_poly(cubic, t - h, 1)) / (2 * h);
      CHECK(eval_poly(cubic, t, 1) == doctest::Approx(fd1).epsilon(1e-6));
      CHECK(eval_poly(cubic, t, 2) == doctest::Approx(fd2).epsilon(1e-6));
    }
  }

  TEST_CASE("window fitter agrees with a direct fit") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> values(60);
    for (auto& v : values) v = u(rng);
    const auto s = series_from(values, 100);
    for (auto origin : {TimeOrigin::kWindowStart, TimeOrigin::kWindowCenter}) {
      const double alpha = select_alpha(21, 2, 2.0, origin);
      const WindowFitter fitter(21, 2, alpha, origin);
      for (std::size_t off : {0u, 17u, 39u}) {
        CentralitySeries w = series_from({values.begin() + off, values.begin() + off + 21}, 100 + off);
        const auto direct = fit_tikhonov(w, 2, alpha, origin);
        const auto fast = fitter.fit(s, off);
        CHECK(fast.t_start == direct.t_start);
        CHECK(fast.origin == direct.origin);
        for (int k = 0; k < 3; ++k) CHECK(fast.beta[k] == doctest::Approx(direct.beta[k]).epsilon(1e-10));
      }
      CHECK_THROWS_AS(fitter.fit(s, 40), RangeError);
    }
  }

  TEST_CASE("centered origin keeps a constant out of the slope") {
    const auto s = series_from(std::vector<double>(21, 0.7));
    const double alpha = select_alpha(21, 2, 2.0, TimeOrigin::kWindowCenter);
    const auto p = fit_tikhonov(s, 2, alpha, TimeOrigin::kWindowCenter);
    CHECK(std::abs(p.beta[1]) < 1e-15);
    const auto q = fit_tikhonov(s, 2, select_alpha(21, 2, 2.0), TimeOrigin::kWindowStart);
    CHECK(std::abs(q.beta[1]) > 1e-6);
  }
}
