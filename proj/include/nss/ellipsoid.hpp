#pragma once

#include <vector>

namespace nss {

/// Axis-aligned ellipsoid {x : sum_i eigenvalues[i] * x_i^2 <= 1}.
struct EllipsoidSpec {
  int dim = 0;
  std::vector<double> eigenvalues;

  static EllipsoidSpec unit_ball(int d);
  /// Unit ball with the first d/2 semi-axes scaled by `factor` (eigenvalues 1 / factor^2).
  static EllipsoidSpec shrunk_axes(int d, double factor);

  /// Mean eigenvalue Tr(A) / d.
  double mu() const;
  double log_volume() const;
  void validate() const;
};

}  // namespace nss
