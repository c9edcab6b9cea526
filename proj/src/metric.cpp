#include "nss/metric.hpp"

#include <cmath>
#include <string>

namespace nss {

namespace {

constexpr double kSymmetryTol = 1e-9;
constexpr double kMinConditioning = 1e-14;

// Cholesky of an SPD matrix; empty optional on failure or near-singularity.
std::optional<Matrix> checked_cholesky(const Matrix& a) {
  Eigen::LLT<Matrix> llt(a);
  if (llt.info() != Eigen::Success) return std::nullopt;
  Matrix l = llt.matrixL();
  const Eigen::VectorXd diag = l.diagonal();
  if (!diag.allFinite() || diag.minCoeff() <= 0.0) return std::nullopt;
  const double ratio = diag.minCoeff() / diag.maxCoeff();
  if (ratio * ratio < kMinConditioning) return std::nullopt;
  return l;
}

void require_symmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols() || a.rows() == 0) {
    throw InvalidArgument(std::string(what) + ": matrix must be square and non-empty");
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > kSymmetryTol * scale) {
    throw InvalidArgument(std::string(what) + ": matrix is not symmetric");
  }
}

}  // namespace

CovarianceMetric CovarianceMetric::identity(int dim) {
  if (dim <= 0) throw InvalidArgument("metric dimension must be positive");
  CovarianceMetric m;
  m.matrix_ = Matrix::Identity(dim, dim);
  m.covariance_ = m.matrix_;
  m.factor_ = m.matrix_;
  m.identity_ = true;
  return m;
}

CovarianceMetric CovarianceMetric::from_covariance(const Matrix& covariance, double reg) {
  require_symmetric(covariance, "covariance metric");
  const Matrix sym = 0.5 * (covariance + covariance.transpose());
  auto l = checked_cholesky(sym);
  if (!l) throw InvalidArgument("covariance metric: matrix is not positive definite");
  CovarianceMetric m;
  m.covariance_ = sym;
  m.factor_ = std::move(*l);
  const int d = static_cast<int>(sym.rows());
  m.matrix_ = Eigen::LLT<Matrix>(sym).solve(Matrix::Identity(d, d));
  m.matrix_ = 0.5 * (m.matrix_ + m.matrix_.transpose()).eval();
  m.reg_ = reg;
  return m;
}

CovarianceMetric CovarianceMetric::from_conditioning(const Matrix& conditioning) {
  require_symmetric(conditioning, "conditioning metric");
  const Matrix sym = 0.5 * (conditioning + conditioning.transpose());
  Eigen::LLT<Matrix> llt(sym);
  if (llt.info() != Eigen::Success) {
    throw InvalidArgument("conditioning metric: matrix is not positive definite");
  }
  const int d = static_cast<int>(sym.rows());
  Matrix cov = llt.solve(Matrix::Identity(d, d));
  CovarianceMetric m = from_covariance(0.5 * (cov + cov.transpose()));
  m.matrix_ = sym;
  return m;
}

double CovarianceMetric::norm(const Point& v) const {
  if (identity_) return v.norm();
  return factor_.triangularView<Eigen::Lower>().solve(v).norm();
}

CovarianceMetric estimate_metric(std::span<const Point> points, double reg) {
  if (points.size() < 2) throw InvalidArgument("estimate_metric: need at least 2 points");
  if (reg < 0.0) throw InvalidArgument("estimate_metric: reg must be >= 0");
  const auto d = points.front().size();
  if (d == 0) throw InvalidArgument("estimate_metric: zero-dimensional points");
  Point mean = Point::Zero(d);
  for (const auto& p : points) {
    if (p.size() != d) throw InvalidArgument("estimate_metric: dimension mismatch");
    mean += p;
  }
  const auto n = static_cast<double>(points.size());
  mean /= n;
  Matrix cov = Matrix::Zero(d, d);
  for (const auto& p : points) {
    const Point c = p - mean;
    cov.selfadjointView<Eigen::Lower>().rankUpdate(c);
  }
  cov = cov.selfadjointView<Eigen::Lower>();
  cov /= (n - 1.0);

  const double mean_diag = cov.diagonal().mean();
  Matrix regularized = cov;
  regularized.diagonal().array() += reg * mean_diag;
  if (checked_cholesky(regularized)) {
    return CovarianceMetric::from_covariance(regularized, reg);
  }
  const double scale = (mean_diag > 0.0 && std::isfinite(mean_diag)) ? mean_diag : 1.0;
  return CovarianceMetric::from_covariance(scale * Matrix::Identity(d, d), reg);
}

Point draw_direction(const CovarianceMetric& metric, RngStream& rng) {
  const int d = metric.dim();
  Point z(d);
  for (int i = 0; i < d; ++i) z[i] = rng.normal();
  Point v = metric.is_identity() ? z : Point(metric.factor().triangularView<Eigen::Lower>() * z);
  double len = v.norm();
  while (len == 0.0) {  // measure-zero, but keep the unit-norm contract exact
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    v = metric.is_identity() ? z : Point(metric.factor().triangularView<Eigen::Lower>() * z);
    len = v.norm();
  }
  return v / len;
}

}  // namespace nss
