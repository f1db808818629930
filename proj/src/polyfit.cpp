#include "stylegraph/polyfit.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <shared_mutex>
#include <tuple>

#include "stylegraph/error.hpp"

namespace stylegraph {

namespace {

void check_degree(int degree) {
  if (degree < 0) throw DomainError("polynomial degree must be >= 0");
}

Eigen::MatrixXd tikhonov_operator(const DesignMatrix& m, double alpha) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.entries, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const auto& s = svd.singularValues();
  Eigen::VectorXd filter(s.size());
  const double a2 = alpha * alpha;
  for (Eigen::Index k = 0; k < s.size(); ++k) {
    const double denom = s[k] * s[k] + a2;
    filter[k] = denom > 0.0 ? s[k] / denom : 0.0;
  }
  return svd.matrixV() * filter.asDiagonal() * svd.matrixU().transpose();
}

std::vector<double> to_vector(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

double origin_of(FrameIndex t_start, std::size_t samples, TimeOrigin origin) {
  const double start = static_cast<double>(t_start);
  return origin == TimeOrigin::kWindowStart ? start : start + 0.5 * static_cast<double>(samples - 1);
}

CentralityPolynomial make_poly(CentralityKind kind, FrameIndex t_start, std::size_t samples, int degree,
                               double alpha, TimeOrigin origin, std::vector<double> beta, double kappa) {
  CentralityPolynomial p;
  p.kind = kind;
  p.beta = std::move(beta);
  p.degree = degree;
  p.alpha = alpha;
  p.t_start = t_start;
  p.t_end = t_start + static_cast<FrameIndex>(samples) - 1;
  p.origin = origin_of(t_start, samples, origin);
  p.kappa = kappa;
  return p;
}

}  // namespace

DesignMatrix vandermonde(std::span<const double> times, int degree) {
  check_degree(degree);
  if (times.empty()) throw DomainError("Vandermonde design needs at least one sample time");
  DesignMatrix m;
  m.degree = degree;
  m.entries.resize(static_cast<Eigen::Index>(times.size()), degree + 1);
  for (std::size_t r = 0; r < times.size(); ++r) {
    double power = 1.0;
    for (int c = 0; c <= degree; ++c) {
      m.entries(static_cast<Eigen::Index>(r), c) = power;
      power *= times[r];
    }
  }
  return m;
}

std::vector<double> window_times(std::size_t samples, TimeOrigin origin) {
  std::vector<double> t(samples);
  const double shift = origin == TimeOrigin::kWindowStart ? 0.0 : 0.5 * static_cast<double>(samples - 1);
  for (std::size_t k = 0; k < samples; ++k) t[k] = static_cast<double>(k) - shift;
  return t;
}

std::vector<double> solve_ols(const DesignMatrix& m, std::span<const double> values) {
  if (values.size() != m.samples()) throw DomainError("value count does not match design rows");
  if (m.samples() < static_cast<std::size_t>(m.degree + 1)) {
    throw DomainError("need at least d+1 samples for a degree-d fit");
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(m.entries);
  if (qr.rank() < m.degree + 1) throw SingularError("design matrix is rank deficient (repeated sample times?)");
  const Eigen::Map<const Eigen::VectorXd> rhs(values.data(), static_cast<Eigen::Index>(values.size()));
  return to_vector(qr.solve(rhs));
}

std::vector<double> solve_tikhonov(const DesignMatrix& m, std::span<const double> values, double alpha) {
  if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw DomainError("regularization alpha must be >= 0");
  if (alpha == 0.0) return solve_ols(m, values);
  if (values.size() != m.samples()) throw DomainError("value count does not match design rows");
  const Eigen::Map<const Eigen::VectorXd> rhs(values.data(), static_cast<Eigen::Index>(values.size()));
  return to_vector(tikhonov_operator(m, alpha) * rhs);
}

CentralityPolynomial fit_ols(const CentralitySeries& series, int degree, TimeOrigin origin) {
  check_degree(degree);
  if (series.size() < static_cast<std::size_t>(degree + 1)) {
    throw DomainError("series of length " + std::to_string(series.size()) + " is too short for degree " +
                      std::to_string(degree));
  }
  const auto m = vandermonde(window_times(series.size(), origin), degree);
  return make_poly(series.kind, series.t_start, series.size(), degree, 0.0, origin, solve_ols(m, series.values), condition_number(m, 0.0));
}

CentralityPolynomial fit_tikhonov(const CentralitySeries& series, int degree, double alpha, TimeOrigin origin) {
  if (alpha == 0.0) return fit_ols(series, degree, origin);
  check_degree(degree);
  if (series.values.empty()) throw DomainError("cannot fit an empty series");
  const auto m = vandermonde(window_times(series.size(), origin), degree);
  return make_poly(series.kind, series.t_start, series.size(), degree, alpha, origin, solve_tikhonov(m, series.values, alpha), condition_number(m, alpha));
}

double condition_number(const DesignMatrix& m, double alpha) {
  if (!(alpha >= 0.0)) throw DomainError("regularization alpha must be >= 0");
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m.entries);
  const auto& s = svd.singularValues();
  const double smax2 = s[0] * s[0];
  // Fewer rows than columns leaves trailing singular values at zero.
  const double smin = m.entries.rows() < m.entries.cols() ? 0.0 : s[s.size() - 1];
  const double smin2 = smin * smin;
  const double a2 = alpha * alpha;
  if (alpha == 0.0) {
    if (smin2 == 0.0 || smin <= std::numeric_limits<double>::epsilon() * s[0]) {
      return std::numeric_limits<double>::infinity();
    }
    return smax2 / smin2;
  }
  return (smax2 + a2) / (smin2 + a2);
}

double select_alpha(std::size_t samples, int degree, double delta, TimeOrigin origin) {
  if (!(delta > 1.0)) throw DomainError("condition bound delta must be > 1");
  check_degree(degree);
  if (samples == 0) throw DomainError("need at least one sample");

  using Key = std::tuple<std::size_t, int, double, TimeOrigin>;
  static std::map<Key, double> cache;
  static std::shared_mutex mutex;
  const Key key{samples, degree, delta, origin};
  {
    std::shared_lock lock(mutex);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }

  const auto m = vandermonde(window_times(samples, origin), degree);
  double alpha = 0.0;
  if (!(condition_number(m, 0.0) <= delta)) {
    constexpr int kLo = -160;  // 1e-10
    constexpr int kHi = 240;   // 1e15
    auto grid = [](int k) { return std::pow(10.0, k / 16.0); };
    if (!(condition_number(m, grid(kHi)) <= delta)) throw DomainError("no alpha on the search grid meets delta");
    int lo = kLo - 1;  // fails (treated as alpha -> 0)
    int hi = kHi;      // satisfies
    while (hi - lo > 1) {
      const int mid = lo + (hi - lo) / 2;
      if (condition_number(m, grid(mid)) <= delta) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
    alpha = grid(hi);
  }
  std::unique_lock lock(mutex);
  cache.emplace(key, alpha);
  return alpha;
}

std::vector<ConditionRow> condition_study(int degree, std::size_t t_min, std::size_t t_max, double delta,
                                          TimeOrigin origin) {
  check_degree(degree);
  if (t_min == 0 || t_min > t_max) throw DomainError("window range must satisfy 1 <= t_min <= t_max");
  std::vector<ConditionRow> rows;
  for (std::size_t n = t_min; n <= t_max; ++n) {
    const auto m = vandermonde(window_times(n, origin), degree);
    const double alpha = select_alpha(n, degree, delta, origin);
    rows.push_back({n, condition_number(m, 0.0), alpha, condition_number(m, alpha)});
  }
  return rows;
}

double eval_poly(const CentralityPolynomial& p, double t, int order) {
  if (order < 0) throw DomainError("derivative order must be >= 0");
  const double tau = t - p.origin;
  double result = 0.0;
  for (int i = static_cast<int>(p.beta.size()) - 1; i >= order; --i) {
    double falling = 1.0;  // i * (i-1) * ... * (i-order+1)
    for (int k = 0; k < order; ++k) falling *= static_cast<double>(i - k);
    result = result * tau + falling * p.beta[static_cast<std::size_t>(i)];
  }
  return result;
}

WindowFitter::WindowFitter(std::size_t samples, int degree, double alpha, TimeOrigin origin)
    : samples_(samples), degree_(degree), alpha_(alpha), origin_(origin) {
  check_degree(degree);
  if (samples < static_cast<std::size_t>(degree + 1)) throw DomainError("window shorter than d+1 samples");
  if (!(alpha >= 0.0)) throw DomainError("regularization alpha must be >= 0");
  const auto m = vandermonde(window_times(samples, origin), degree);
  kappa_ = condition_number(m, alpha);
  if (alpha == 0.0 && !std::isfinite(kappa_)) throw SingularError("window design is singular");
  solve_ = tikhonov_operator(m, alpha);
}

CentralityPolynomial WindowFitter::fit(const CentralitySeries& series, std::size_t offset) const {
  if (offset + samples_ > series.size()) throw RangeError("fit window runs past the end of the series");
  const Eigen::Map<const Eigen::VectorXd> rhs(series.values.data() + offset, static_cast<Eigen::Index>(samples_));
  std::vector<double> beta;
  if (level_removal_) {
    const double mean = rhs.mean();
    beta = to_vector(solve_ * (rhs.array() - mean).matrix());
    beta[0] += mean;
  } else {
    beta = to_vector(solve_ * rhs);
  }
  return make_poly(series.kind, series.t_start + static_cast<FrameIndex>(offset), samples_, degree_, alpha_, origin_,
                   std::move(beta), kappa_);
}

}  // namespace stylegraph
