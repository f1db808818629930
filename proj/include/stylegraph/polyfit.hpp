#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "stylegraph/centrality.hpp"

namespace stylegraph {

/// Where local time zero sits inside a fit window. OLS is invariant to the
/// choice; Tikhonov is not, and only a centered origin keeps constant input
/// from leaking into the fitted slope.
enum class TimeOrigin { kWindowStart, kWindowCenter };

/// T x (d+1) Vandermonde design, row r = [1, t_r, t_r^2, ..., t_r^d].
struct DesignMatrix {
  Eigen::MatrixXd entries;
  int degree = 0;

  std::size_t samples() const noexcept { return static_cast<std::size_t>(entries.rows()); }
};

DesignMatrix vandermonde(std::span<const double> times, int degree);

/// Local sample times 0..T-1, or centered on the window midpoint.
std::vector<double> window_times(std::size_t samples, TimeOrigin origin);

/// Polynomial in local time tau = t - origin, where t is a frame index.
struct CentralityPolynomial {
  CentralityKind kind = CentralityKind::kDegree;
  std::vector<double> beta;
  int degree = 0;
  double alpha = 0.0;
  FrameIndex t_start = 0;
  FrameIndex t_end = 0;
  double origin = 0.0;
  double kappa = 1.0;
};

/// Least squares through column-pivoted QR; throws SingularError on rank loss.
std::vector<double> solve_ols(const DesignMatrix& m, std::span<const double> values);

/// beta = (M^T M + alpha^2 I)^{-1} M^T values, computed by filtering the
/// singular values of M as sigma / (sigma^2 + alpha^2).
std::vector<double> solve_tikhonov(const DesignMatrix& m, std::span<const double> values, double alpha);

CentralityPolynomial fit_ols(const CentralitySeries& series, int degree,
                             TimeOrigin origin = TimeOrigin::kWindowStart);
/// alpha == 0 defers to fit_ols.
CentralityPolynomial fit_tikhonov(const CentralitySeries& series, int degree, double alpha,
                                  TimeOrigin origin = TimeOrigin::kWindowStart);

/// kappa(M^T M) = sigma_max^2 / sigma_min^2 when alpha == 0 (+inf if singular),
/// otherwise (sigma_max^2 + alpha^2) / (sigma_min^2 + alpha^2).
double condition_number(const DesignMatrix& m, double alpha);

/// Smallest alpha on a 1/16-decade grid with condition_number <= delta (0 when
/// the design already satisfies it). Results are cached per (T, d, delta, origin).
double select_alpha(std::size_t samples, int degree, double delta, TimeOrigin origin = TimeOrigin::kWindowStart);

struct ConditionRow {
  std::size_t samples = 0;
  double kappa = 0.0;        // unregularized
  double alpha = 0.0;        // select_alpha(samples, degree, delta)
  double kappa_alpha = 0.0;  // with that alpha
};

/// One row per window length in [t_min, t_max].
std::vector<ConditionRow> condition_study(int degree, std::size_t t_min, std::size_t t_max, double delta,
                                          TimeOrigin origin = TimeOrigin::kWindowStart);

/// Value (order 0) or derivative of the given order at frame t. Orders above
/// the polynomial degree evaluate to 0.
double eval_poly(const CentralityPolynomial& p, double t, int order);

/// Precomputed regularized solve for fixed-length windows, so sliding fits are
/// a matrix-vector product. Produces the same coefficients as fit_tikhonov.
class WindowFitter {
 public:
  WindowFitter(std::size_t samples, int degree, double alpha, TimeOrigin origin);

  /// Fit each window to its values minus their mean and add the mean back to
  /// beta_0, so the level of a window never leaks into the higher coefficients.
  void set_level_removal(bool on) noexcept { level_removal_ = on; }

  std::size_t samples() const noexcept { return samples_; }
  double alpha() const noexcept { return alpha_; }

  /// Fit of values[offset, offset + samples) of the series.
  CentralityPolynomial fit(const CentralitySeries& series, std::size_t offset) const;

 private:
  std::size_t samples_;
  int degree_;
  double alpha_;
  TimeOrigin origin_;
  double kappa_;
  bool level_removal_ = false;
  Eigen::MatrixXd solve_;  // (d+1) x T
};

}  // namespace stylegraph
