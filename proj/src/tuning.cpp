#include "nss/tuning.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "nss/numeric.hpp"
#include "nss/parallel.hpp"
#include "nss/targets.hpp"

namespace nss {

namespace {

// Gamma(3/2, 2) expectations are taken in s = sqrt(q), where the density
// 2 s^2 exp(-s^2/2) / (Gamma(3/2) 2^{3/2}) is smooth at the origin.
constexpr double kUpperQ = 80.0;  // 40 * scale; the tail beyond is below e^{-40}

template <class F>
double gamma_expectation_sqrt(F g) {
  const double norm = 2.0 / (boost::math::tgamma(1.5) * std::pow(2.0, 1.5));
  auto integrand = [&](double s) { return g(s) * norm * s * s * std::exp(-0.5 * s * s); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(integrand, 0.0, std::sqrt(kUpperQ), 20,
                                                                       1e-14);
}

CostSample summarize(const std::vector<double>& xs) {
  const MeanStd ms = mean_std(xs);
  return CostSample{ms.mean, ms.std, xs.size()};
}

CostSample slice_cost(const TargetModel& target, double w, int n, std::uint64_t seed, int workers,
                      const std::function<Point(RngStream&)>& start) {
  if (!(w > 0.0)) throw InvalidArgument("slice width must be positive");
  if (n < 2) throw InvalidArgument("need at least 2 Monte Carlo samples");
  SliceConfig cfg;
  cfg.width = w;
  cfg.scale = WidthScale::kEuclidean;
  const auto metric = CovarianceMetric::identity(target.dim);
  std::vector<double> evals(static_cast<std::size_t>(n));
  parallel_for(evals.size(), workers, [&](std::size_t i) {
    RngStream rng(seed, StreamId{Phase::kValidate, 0, i});
    const SliceState state = make_slice_state(start(rng), 0.5, target);
    const Point v = draw_direction(metric, rng);
    evals[i] = slice_step(state, v, w, 0.5, target, cfg, rng).n_evals;
  });
  return summarize(evals);
}

}  // namespace

double phi(double u) {
  if (u < 0.0 || std::isnan(u)) throw InvalidArgument("phi: u must be >= 0");
  if (u == 0.0) return 0.0;
  if (u < 1e-4) {
    // Series: u/2 - u^2/6 + u^3/12
    return u * (0.5 - u * (1.0 / 6.0 - u / 12.0));
  }
  return ((1.0 + u) * std::log1p(u) - u) / u;
}

double expected_cost(double ell, double w) {
  if (!(ell > 0.0) || !(w > 0.0)) throw InvalidArgument("expected_cost: ell and w must be positive");
  return ell / w + 1.0 + 2.0 * phi(w / ell);
}

double fixed_slice_ratio() {
  auto f = [](double u) { return u - std::log1p(u) - 0.5; };
  double lo = 1.0;
  double hi = 2.0;
  double u = 1.5;
  for (int it = 0; it < 100; ++it) {
    const double fu = f(u);
    if (std::abs(fu) < 1e-15) break;
    if (fu > 0.0) {
      hi = u;
    } else {
      lo = u;
    }
    double next = u - fu / (u / (1.0 + u));
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (next == u) break;
    u = next;
  }
  return u;
}

double optimal_width_fixed(double ell) {
  if (!(ell > 0.0)) throw InvalidArgument("optimal_width_fixed: ell must be positive");
  static const double u_star = fixed_slice_ratio();
  return u_star * ell;
}

double gamma_sqrt_mean() {
  return gamma_expectation_sqrt([](double s) { return s; });
}

double chord_ratio_mean() {
  const double c = gamma_sqrt_mean();
  return gamma_expectation_sqrt([c](double s) { return s / c; });
}

double kappa_map(double kappa) {
  const double c = gamma_sqrt_mean();
  return 0.5 + gamma_expectation_sqrt([c, kappa](double s) {
           const double r = s / c;
           return r > 0.0 ? r * std::log1p(kappa / r) : 0.0;
         });
}

double kappa_infinity(double tol) {
  if (!(tol > 0.0)) throw InvalidArgument("kappa_infinity: tol must be positive");
  double kappa = 1.0;
  for (int it = 0; it < 1000; ++it) {
    const double next = kappa_map(kappa);
    if (std::abs(next - kappa) < tol) return next;
    kappa = next;
  }
  throw RuntimeError("kappa_infinity: fixed-point iteration did not converge");
}

double mean_chord_length(const EllipsoidSpec& spec) {
  spec.validate();
  return 4.0 * std::sqrt(2.0 / (M_PI * spec.mu() * spec.dim));
}

double optimal_width_ellipsoid(const EllipsoidSpec& spec) {
  static const double kappa = kappa_infinity(1e-12);
  return kappa * mean_chord_length(spec);
}

CostSample cost_std_profile(const EllipsoidSpec& spec, double w, int n, std::uint64_t seed, int workers) {
  const TargetModel target = level_set_target(spec);
  std::vector<double> axes(spec.eigenvalues.size());
  for (std::size_t i = 0; i < axes.size(); ++i) axes[i] = 1.0 / std::sqrt(spec.eigenvalues[i]);
  const int d = spec.dim;
  auto start = [d, &axes](RngStream& rng) {
    // Uniform in the unit ball, then stretched onto the ellipsoid axes.
    Point z(d);
    for (int i = 0; i < d; ++i) z[i] = rng.normal();
    const double radius = std::pow(rng.uniform(), 1.0 / d);
    Point x = z * (radius / z.norm());
    for (int i = 0; i < d; ++i) x[i] *= axes[static_cast<std::size_t>(i)];
    return x;
  };
  return slice_cost(target, w, n, seed, workers, start);
}

CostSample interval_cost(double ell, double w, int n, std::uint64_t seed, int workers) {
  if (!(ell > 0.0)) throw InvalidArgument("interval_cost: ell must be positive");
  const TargetModel target = interval_target(0.0, ell);
  auto start = [ell](RngStream& rng) { return Point::Constant(1, rng.uniform(0.0, ell)); };
  return slice_cost(target, w, n, seed, workers, start);
}

std::vector<SweepPoint> cost_sweep(const EllipsoidSpec& spec, const std::vector<double>& widths, int n,
                                   std::uint64_t seed, int workers) {
  std::vector<SweepPoint> out;
  out.reserve(widths.size());
  for (double w : widths) out.push_back(SweepPoint{w, cost_std_profile(spec, w, n, seed, workers)});
  return out;
}

double sweep_minimum(const std::vector<SweepPoint>& sweep) {
  if (sweep.size() < 3) throw InvalidArgument("sweep_minimum: need at least 3 grid points");
  std::size_t best = 0;
  for (std::size_t i = 1; i < sweep.size(); ++i) {
    if (sweep[i].cost.mean < sweep[best].cost.mean) best = i;
  }
  // Five-point window centred on the grid minimum, shifted to stay in range.
  const std::size_t span = std::min<std::size_t>(5, sweep.size());
  const std::size_t first = std::min(best >= 2 ? best - 2 : 0, sweep.size() - span);
  const std::size_t hi = first + span - 1;
  const auto rows = static_cast<Eigen::Index>(hi - first + 1);
  Eigen::MatrixXd a(rows, 3);
  Eigen::VectorXd b(rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double x = std::log(sweep[first + static_cast<std::size_t>(r)].w);
    a(r, 0) = 1.0;
    a(r, 1) = x;
    a(r, 2) = x * x;
    b[r] = sweep[first + static_cast<std::size_t>(r)].cost.mean;
  }
  const Eigen::VectorXd c = a.colPivHouseholderQr().solve(b);
  if (!(c[2] > 0.0)) return sweep[best].w;
  const double x_min = -c[1] / (2.0 * c[2]);
  const double x_lo = std::log(sweep[first].w);
  const double x_hi = std::log(sweep[hi].w);
  return std::exp(std::clamp(x_min, x_lo, x_hi));
}

std::vector<double> log_grid(double lo, double hi, int n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) throw InvalidArgument("log_grid: need 0 < lo < hi and n >= 2");
  std::vector<double> out(static_cast<std::size_t>(n));
  const double a = std::log(lo);
  const double b = std::log(hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  return out;
}

}  // namespace nss
