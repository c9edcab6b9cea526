#pragma once

#include <cstdint>
#include <vector>

#include "nss/ellipsoid.hpp"
#include "nss/hrss.hpp"

namespace nss {

/// ((1+u) ln(1+u) - u) / u, with phi(0) = 0.
double phi(double u);

/// Expected stepping-out plus shrinkage count for a slice of length ell at width w.
double expected_cost(double ell, double w);

/// Root of u - ln(1+u) = 1/2.
double fixed_slice_ratio();
/// Width minimising expected_cost for a fixed slice length: u* ell.
double optimal_width_fixed(double ell);

/// E[Q^{1/2}] for Q ~ Gamma(shape 3/2, scale 2), by quadrature.
double gamma_sqrt_mean();
/// E[R] for R = Q^{1/2} / E[Q^{1/2}], by quadrature (equals 1).
double chord_ratio_mean();
/// 1/2 + E[R ln(1 + kappa / R)].
double kappa_map(double kappa);
/// Fixed point of kappa_map by iteration until successive iterates differ by < tol.
double kappa_infinity(double tol = 1e-10);

/// Leading-order mean chord length 4 sqrt(2 / (pi mu d)).
double mean_chord_length(const EllipsoidSpec& spec);
/// kappa_inf * mean_chord_length(spec).
double optimal_width_ellipsoid(const EllipsoidSpec& spec);

struct CostSample {
  double mean = 0.0;
  double std = 0.0;
  std::size_t n = 0;
};

/**
 * Monte Carlo per-step cost (n_evals) of one slice step on the uniform
 * ellipsoid, from i.i.d. uniform starts and uniform directions (M = I).
 * Sample i uses its own stream, so equal seeds give common random numbers
 * across widths.
 */
CostSample cost_std_profile(const EllipsoidSpec& spec, double w, int n, std::uint64_t seed, int workers = 1);

/// Same statistic for Uniform[0, ell] with uniform starts.
CostSample interval_cost(double ell, double w, int n, std::uint64_t seed, int workers = 1);

struct SweepPoint {
  double w = 0.0;
  CostSample cost;
};

/// cost_std_profile over a width grid with common random numbers.
std::vector<SweepPoint> cost_sweep(const EllipsoidSpec& spec, const std::vector<double>& widths, int n,
                                   std::uint64_t seed, int workers = 1);

/// Width at the minimum of a parabola in log w through the grid minimum and its neighbours.
double sweep_minimum(const std::vector<SweepPoint>& sweep);

/// n log-spaced values from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int n);

}  // namespace nss
