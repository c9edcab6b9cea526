#pragma once

#include <cstdint>
#include <vector>

#include "nss/ellipsoid.hpp"
#include "nss/target.hpp"

namespace nss {

struct MixtureSpec {
  std::vector<double> weights;
  std::vector<Point> means;
  std::vector<Matrix> covs;
  Box prior_box;

  void validate() const;
};

/// 40 unit-covariance modes drawn uniformly in [-40, 40]^2, prior box [-50, 50]^2.
MixtureSpec mog40_spec(std::uint64_t layout_seed = 40);
/// 5 modes in 10-d, means uniform in [-40, 40]^10, diagonal std in [1, 2.5], box [-50, 50]^10.
MixtureSpec mog10_spec(std::uint64_t layout_seed = 10);

/**
 * Gaussian mixture likelihood under a uniform box prior. The exact evidence
 * uses per-axis erf products for diagonal covariances and a fixed-seed Monte
 * Carlo estimate of the in-box mass otherwise.
 */
TargetModel mog_target(const MixtureSpec& spec);

/// Neal's funnel: y ~ N(0, 3^2), x_n ~ N(0, exp(y)) (std exp(y/2)), uniform prior on [lo, hi]^d.
TargetModel funnel_target(int d, double lo = -20.0, double hi = 20.0);

struct AlphaLikelihoodSpec {
  double alpha = 1.0;
  int d = 2;
  double r = 5.14;
  double A = 10.0;

  void validate() const;
};

/**
 * L(theta) = alpha * exp(-|theta|^2 / 2) + (1 - alpha) * exp(-A d + A sum cos(2 pi theta_i))
 * under a uniform prior on [-r, r]^d. Provides an analytic gradient.
 */
TargetModel alpha_target(const AlphaLikelihoodSpec& spec);

/// log Z of the alpha likelihood from 1-d adaptive quadratures.
double alpha_exact_log_z(const AlphaLikelihoodSpec& spec);
/// log of the integral of exp(-x^2/2) over [-r, r].
double alpha_log_gauss_integral(double r);
/// log of the integral of exp(A cos(2 pi x)) over [-r, r].
double alpha_log_cosine_integral(double r, double A);

/**
 * Uniform level set of an ellipsoid: energy 0 inside, +inf outside, uniform
 * prior on the bounding box.
 */
TargetModel level_set_target(const EllipsoidSpec& spec);
/// Axis-aligned box |x_i| <= half_widths[i]; the prior box is the region itself.
TargetModel cube_level_set(const std::vector<double>& half_widths);
TargetModel cube_level_set(int d, double side);
/// Uniform on [lo, hi] in one dimension, with energy 0 (the slice-cost test case).
TargetModel interval_target(double lo, double hi);

}  // namespace nss
