#include "nss/ellipsoid.hpp"

#include <cmath>
#include <numeric>

#include "nss/target.hpp"

namespace nss {

EllipsoidSpec EllipsoidSpec::unit_ball(int d) {
  if (d < 1) throw InvalidArgument("ellipsoid: dimension must be positive");
  return EllipsoidSpec{d, std::vector<double>(static_cast<std::size_t>(d), 1.0)};
}

EllipsoidSpec EllipsoidSpec::shrunk_axes(int d, double factor) {
  if (!(factor > 0.0)) throw InvalidArgument("ellipsoid: shrink factor must be positive");
  EllipsoidSpec spec = unit_ball(d);
  for (int i = 0; i < d / 2; ++i) spec.eigenvalues[static_cast<std::size_t>(i)] = 1.0 / (factor * factor);
  return spec;
}

double EllipsoidSpec::mu() const {
  return std::accumulate(eigenvalues.begin(), eigenvalues.end(), 0.0) / static_cast<double>(dim);
}

double EllipsoidSpec::log_volume() const {
  double log_det = 0.0;
  for (double l : eigenvalues) log_det += std::log(l);
  const double half_d = 0.5 * dim;
  return half_d * std::log(M_PI) - std::lgamma(half_d + 1.0) - 0.5 * log_det;
}

void EllipsoidSpec::validate() const {
  if (dim < 1) throw InvalidArgument("ellipsoid: dimension must be positive");
  if (eigenvalues.size() != static_cast<std::size_t>(dim)) {
    throw InvalidArgument("ellipsoid: eigenvalue count must equal dimension");
  }
  for (double l : eigenvalues) {
    if (!(l > 0.0) || !std::isfinite(l)) throw InvalidArgument("ellipsoid: eigenvalues must be positive");
  }
}

}  // namespace nss
