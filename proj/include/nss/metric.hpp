#pragma once

#include <span>

#include "nss/rng.hpp"
#include "nss/target.hpp"

namespace nss {

/**
 * \brief Positive definite conditioning matrix M used to draw search directions.
 *
 * Directions are drawn as d ~ N(0, M^{-1}) and normalized, so M plays the role
 * of a precision (mass) matrix and M^{-1} is the covariance being whitened.
 * The object is immutable after construction and safe to share across threads.
 */
class CovarianceMetric {
 public:
  static CovarianceMetric identity(int dim);
  /// Metric whose inverse is `covariance` (the usual whitening metric).
  static CovarianceMetric from_covariance(const Matrix& covariance, double reg = 0.0);
  /// Metric given directly by the conditioning matrix M.
  static CovarianceMetric from_conditioning(const Matrix& conditioning);

  int dim() const { return static_cast<int>(matrix_.rows()); }
  /// The conditioning matrix M.
  const Matrix& matrix() const { return matrix_; }
  /// M^{-1}.
  const Matrix& covariance() const { return covariance_; }
  /// Lower-triangular L with L L^T = M^{-1}.
  const Matrix& factor() const { return factor_; }
  double reg() const { return reg_; }
  bool is_identity() const { return identity_; }

  /// Metric length sqrt(v^T M v).
  double norm(const Point& v) const;

 private:
  CovarianceMetric() = default;
  Matrix matrix_;
  Matrix covariance_;
  Matrix factor_;
  double reg_ = 0.0;
  bool identity_ = false;
};

/**
 * Regularized empirical covariance of `points` as a whitening metric:
 * M^{-1} = C + reg * mean(diag C) * I. Falls back to a scaled identity when
 * the regularized covariance is still rank deficient.
 */
CovarianceMetric estimate_metric(std::span<const Point> points, double reg);

/// Unit (Euclidean) direction v = d / |d| with d ~ N(0, M^{-1}).
Point draw_direction(const CovarianceMetric& metric, RngStream& rng);

}  // namespace nss
