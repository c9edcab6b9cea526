#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <stdexcept>
#include <string>

#include "nss/rng.hpp"

namespace nss {

using Point = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Thrown for contract violations on inputs (bad sizes, bad config values).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a sampler cannot proceed (NaN densities, exhausted budgets).
class RuntimeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Axis-aligned box [lo, hi].
struct Box {
  Point lo;
  Point hi;

  int dim() const { return static_cast<int>(lo.size()); }
  bool contains(const Point& x) const {
    return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
  }
  double log_volume() const { return (hi - lo).array().log().sum(); }
};

/**
 * \brief A target of the form exp(-E(x)) * Pi(x).
 *
 * log_prior returns -inf outside the prior support; energy returns +inf for
 * points with zero likelihood (including hard constraints). All callables are
 * pure and may be invoked concurrently.
 */
struct TargetModel {
  std::string name;
  int dim = 0;
  std::function<double(const Point&)> log_prior;
  std::function<double(const Point&)> energy;
  std::function<Point(const Point&)> energy_grad;  // optional
  std::function<Point(RngStream&)> prior_sample;
  std::optional<double> exact_log_z;
  /// Support of a box-shaped prior, when the prior has one.
  std::optional<Box> prior_box;
  /// Independent draws from the normalized posterior, when available.
  std::function<Point(RngStream&)> reference_sample;

  bool has_gradient() const { return static_cast<bool>(energy_grad); }
  bool has_reference() const { return static_cast<bool>(reference_sample); }
};

}  // namespace nss
