#include "nss/targets.hpp"

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/erf.hpp>

#include <cmath>
#include <memory>
#include <numeric>
#include <string>

#include "nss/numeric.hpp"

namespace nss {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;
constexpr double kTwoPi = 6.283185307179586477;

Box cube_box(int d, double lo, double hi) {
  return Box{Point::Constant(d, lo), Point::Constant(d, hi)};
}

Point uniform_in_box(const Box& box, RngStream& rng) {
  Point x(box.dim());
  for (int i = 0; i < box.dim(); ++i) x[i] = rng.uniform(box.lo[i], box.hi[i]);
  return x;
}

void attach_box_prior(TargetModel& t, const Box& box) {
  const double log_density = -box.log_volume();
  t.prior_box = box;
  t.log_prior = [box, log_density](const Point& x) { return box.contains(x) ? log_density : -kInf; };
  t.prior_sample = [box](RngStream& rng) { return uniform_in_box(box, rng); };
}

// Standard normal mass of [a, b].
double normal_mass(double a, double b) {
  const double s = 1.0 / std::sqrt(2.0);
  if (a > 0.0) return 0.5 * (boost::math::erfc(a * s) - boost::math::erfc(b * s));
  if (b < 0.0) return 0.5 * (boost::math::erfc(-b * s) - boost::math::erfc(-a * s));
  return 0.5 * (boost::math::erf(b * s) - boost::math::erf(a * s));
}

bool is_diagonal(const Matrix& m) {
  return (m - Matrix(m.diagonal().asDiagonal())).cwiseAbs().maxCoeff() == 0.0;
}

struct MixtureData {
  MixtureSpec spec;
  std::vector<Matrix> chol;  // L_j with L_j L_j^T = cov_j
  std::vector<Matrix> precision;
  std::vector<double> log_norm;  // log w_j - log normalizer of component j
  std::vector<double> box_mass;

  // Per-component log density terms, including weights.
  void terms(const Point& x, std::vector<double>& out) const {
    out.resize(spec.means.size());
    for (std::size_t j = 0; j < spec.means.size(); ++j) {
      const Point z = chol[j].triangularView<Eigen::Lower>().solve(x - spec.means[j]);
      out[j] = log_norm[j] - 0.5 * z.squaredNorm();
    }
  }
};

double box_mass_mc(const Matrix& chol, const Point& mean, const Box& box) {
  constexpr int kDraws = 200000;
  RngStream rng(0x5eed, StreamId{Phase::kUser, 0, 0});
  int inside = 0;
  Point z(mean.size());
  for (int n = 0; n < kDraws; ++n) {
    for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
    if (box.contains(mean + chol * z)) ++inside;
  }
  return static_cast<double>(inside) / kDraws;
}

template <class F>
double gk_integral(F f, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, a, b, 15, 1e-14);
}

}  // namespace

void MixtureSpec::validate() const {
  const int d = prior_box.dim();
  if (d <= 0) throw InvalidArgument("mixture: empty prior box");
  if (weights.empty() || weights.size() != means.size() || means.size() != covs.size()) {
    throw InvalidArgument("mixture: weights, means and covs must have equal nonzero length");
  }
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("mixture: weights must be nonnegative");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("mixture: weights must sum to 1");
  if (!((prior_box.hi - prior_box.lo).array() > 0.0).all()) throw InvalidArgument("mixture: degenerate box");
  for (std::size_t j = 0; j < means.size(); ++j) {
    if (means[j].size() != d || covs[j].rows() != d || covs[j].cols() != d) {
      throw InvalidArgument("mixture: component dimension mismatch");
    }
    if (!prior_box.contains(means[j])) throw InvalidArgument("mixture: mean outside prior box");
  }
}

MixtureSpec mog40_spec(std::uint64_t layout_seed) {
  MixtureSpec spec;
  spec.prior_box = cube_box(2, -50.0, 50.0);
  RngStream rng(layout_seed, StreamId{Phase::kUser, 40, 0});
  for (int j = 0; j < 40; ++j) {
    spec.means.push_back(Point{{rng.uniform(-40.0, 40.0), rng.uniform(-40.0, 40.0)}});
    spec.covs.push_back(Matrix::Identity(2, 2));
    spec.weights.push_back(1.0 / 40.0);
  }
  return spec;
}

MixtureSpec mog10_spec(std::uint64_t layout_seed) {
  constexpr int kDim = 10;
  MixtureSpec spec;
  spec.prior_box = cube_box(kDim, -50.0, 50.0);
  RngStream rng(layout_seed, StreamId{Phase::kUser, 10, 0});
  for (int j = 0; j < 5; ++j) {
    Point mean(kDim);
    Point sd(kDim);
    for (int i = 0; i < kDim; ++i) mean[i] = rng.uniform(-40.0, 40.0);
    for (int i = 0; i < kDim; ++i) sd[i] = rng.uniform(1.0, 2.5);
    spec.means.push_back(mean);
    spec.covs.push_back(Matrix(sd.array().square().matrix().asDiagonal()));
    spec.weights.push_back(0.2);
  }
  return spec;
}

TargetModel mog_target(const MixtureSpec& spec) {
  spec.validate();
  const int d = spec.prior_box.dim();
  auto data = std::make_shared<MixtureData>();
  data->spec = spec;
  for (std::size_t j = 0; j < spec.means.size(); ++j) {
    Eigen::LLT<Matrix> llt(spec.covs[j]);
    if (llt.info() != Eigen::Success) throw InvalidArgument("mixture: covariance not positive definite");
    Matrix l = llt.matrixL();
    data->precision.push_back(llt.solve(Matrix::Identity(d, d)));
    data->log_norm.push_back(std::log(spec.weights[j]) - 0.5 * d * kLog2Pi - l.diagonal().array().log().sum());
    if (is_diagonal(spec.covs[j])) {
      double mass = 1.0;
      for (int i = 0; i < d; ++i) {
        const double sd = std::sqrt(spec.covs[j](i, i));
        mass *= normal_mass((spec.prior_box.lo[i] - spec.means[j][i]) / sd,
                            (spec.prior_box.hi[i] - spec.means[j][i]) / sd);
      }
      data->box_mass.push_back(mass);
    } else {
      data->box_mass.push_back(box_mass_mc(l, spec.means[j], spec.prior_box));
    }
    data->chol.push_back(std::move(l));
  }

  TargetModel t;
  t.name = "mog";
  t.dim = d;
  attach_box_prior(t, spec.prior_box);
  t.energy = [data](const Point& x) {
    thread_local std::vector<double> terms;
    data->terms(x, terms);
    return -logsumexp(terms);
  };
  t.energy_grad = [data](const Point& x) {
    thread_local std::vector<double> terms;
    data->terms(x, terms);
    const double total = logsumexp(terms);
    Point g = Point::Zero(x.size());
    for (std::size_t j = 0; j < terms.size(); ++j) {
      g += std::exp(terms[j] - total) * (data->precision[j] * (x - data->spec.means[j]));
    }
    return g;
  };

  double z_in_box = 0.0;
  std::vector<double> post_weights(spec.weights.size());
  for (std::size_t j = 0; j < spec.weights.size(); ++j) {
    post_weights[j] = spec.weights[j] * data->box_mass[j];
    z_in_box += post_weights[j];
  }
  t.exact_log_z = std::log(z_in_box) - spec.prior_box.log_volume();

  // Truncated mixture: pick a component by in-box mass, then reject outside draws.
  std::vector<double> cdf(post_weights.size());
  std::partial_sum(post_weights.begin(), post_weights.end(), cdf.begin());
  for (double& c : cdf) c /= z_in_box;
  t.reference_sample = [data, cdf](RngStream& rng) {
    const double u = rng.uniform();
    const auto j = static_cast<std::size_t>(std::lower_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    const std::size_t comp = std::min(j, cdf.size() - 1);
    Point z(data->spec.means[comp].size());
    for (;;) {
      for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
      Point x = data->spec.means[comp] + data->chol[comp] * z;
      if (data->spec.prior_box.contains(x)) return x;
    }
  };
  return t;
}

TargetModel funnel_target(int d, double lo, double hi) {
  if (d < 2) throw InvalidArgument("funnel: d must be >= 2");
  if (!(lo < hi)) throw InvalidArgument("funnel: empty prior box");
  const Box box = cube_box(d, lo, hi);
  TargetModel t;
  t.name = "funnel";
  t.dim = d;
  attach_box_prior(t, box);
  const double y_const = std::log(3.0) + 0.5 * kLog2Pi;
  t.energy = [y_const](const Point& p) {
    const double y = p[0];
    const int n = static_cast<int>(p.size()) - 1;
    const double sq = p.tail(n).squaredNorm();
    return 0.5 * (y / 3.0) * (y / 3.0) + y_const + 0.5 * sq * std::exp(-y) + n * (0.5 * y + 0.5 * kLog2Pi);
  };
  t.energy_grad = [](const Point& p) {
    const double y = p[0];
    const int n = static_cast<int>(p.size()) - 1;
    const double e = std::exp(-y);
    Point g(p.size());
    g[0] = y / 9.0 - 0.5 * p.tail(n).squaredNorm() * e + 0.5 * n;
    g.tail(n) = p.tail(n) * e;
    return g;
  };
  t.reference_sample = [box](RngStream& rng) {
    Point p(box.dim());
    for (;;) {
      p[0] = 3.0 * rng.normal();
      const double s = std::exp(0.5 * p[0]);
      for (int i = 1; i < p.size(); ++i) p[i] = s * rng.normal();
      if (box.contains(p)) return p;
    }
  };
  return t;
}

void AlphaLikelihoodSpec::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw InvalidArgument("alpha must lie in [0, 1]");
  if (d < 1) throw InvalidArgument("alpha target: d must be >= 1");
  if (!(r > 0.0)) throw InvalidArgument("alpha target: r must be positive");
  if (!(A >= 0.0)) throw InvalidArgument("alpha target: A must be nonnegative");
}

double alpha_log_gauss_integral(double r) {
  return std::log(gk_integral([](double x) { return std::exp(-0.5 * x * x); }, -r, r));
}

double alpha_log_cosine_integral(double r, double A) {
  // Integrate exp(A (cos - 1)) one period at a time to keep every panel smooth.
  auto f = [A](double x) { return std::exp(A * (std::cos(kTwoPi * x) - 1.0)); };
  double total = 0.0;
  double a = -r;
  while (a < r) {
    const double b = std::min(r, std::floor(a) + 1.0);
    total += gk_integral(f, a, b);
    a = b;
  }
  return A + std::log(total);
}

double alpha_exact_log_z(const AlphaLikelihoodSpec& spec) {
  spec.validate();
  const double d = spec.d;
  const double log_box = d * std::log(2.0 * spec.r);
  double log_f = -kInf;
  double log_g = -kInf;
  if (spec.alpha > 0.0) log_f = std::log(spec.alpha) + d * alpha_log_gauss_integral(spec.r);
  if (spec.alpha < 1.0) {
    log_g = std::log1p(-spec.alpha) - spec.A * d + d * alpha_log_cosine_integral(spec.r, spec.A);
  }
  return log_add(log_f, log_g) - log_box;
}

TargetModel alpha_target(const AlphaLikelihoodSpec& spec) {
  spec.validate();
  const Box box = cube_box(spec.d, -spec.r, spec.r);
  TargetModel t;
  t.name = "alpha";
  t.dim = spec.d;
  attach_box_prior(t, box);
  const double log_a = spec.alpha > 0.0 ? std::log(spec.alpha) : -kInf;
  const double log_b = spec.alpha < 1.0 ? std::log1p(-spec.alpha) : -kInf;
  const double A = spec.A;
  const double d = spec.d;
  // Log weights of the two mixture terms at theta.
  auto terms = [=](const Point& th, double& tf, double& tg) {
    tf = log_a == -kInf ? -kInf : log_a - 0.5 * th.squaredNorm();
    tg = log_b == -kInf ? -kInf : log_b - A * d + A * (kTwoPi * th.array()).cos().sum();
  };
  t.energy = [terms](const Point& th) {
    double tf = 0.0;
    double tg = 0.0;
    terms(th, tf, tg);
    return -log_add(tf, tg);
  };
  t.energy_grad = [terms, A](const Point& th) {
    double tf = 0.0;
    double tg = 0.0;
    terms(th, tf, tg);
    const double total = log_add(tf, tg);
    const double pf = tf == -kInf ? 0.0 : std::exp(tf - total);
    const double pg = tg == -kInf ? 0.0 : std::exp(tg - total);
    // grad E = pf * theta + pg * 2 pi A sin(2 pi theta)
    return Point(pf * th.array() + pg * kTwoPi * A * (kTwoPi * th.array()).sin());
  };
  t.exact_log_z = alpha_exact_log_z(spec);
  return t;
}

TargetModel level_set_target(const EllipsoidSpec& spec) {
  spec.validate();
  Point half(spec.dim);
  Point lambda(spec.dim);
  for (int i = 0; i < spec.dim; ++i) {
    lambda[i] = spec.eigenvalues[static_cast<std::size_t>(i)];
    half[i] = 1.0 / std::sqrt(lambda[i]);
  }
  const Box box{-half, half};
  TargetModel t;
  t.name = "ellipsoid";
  t.dim = spec.dim;
  attach_box_prior(t, box);
  t.energy = [lambda](const Point& x) {
    return (lambda.array() * x.array().square()).sum() <= 1.0 ? 0.0 : kInf;
  };
  t.exact_log_z = spec.log_volume() - box.log_volume();
  return t;
}

TargetModel cube_level_set(const std::vector<double>& half_widths) {
  if (half_widths.empty()) throw InvalidArgument("cube: dimension must be positive");
  const int d = static_cast<int>(half_widths.size());
  Point half(d);
  for (int i = 0; i < d; ++i) {
    if (!(half_widths[static_cast<std::size_t>(i)] > 0.0)) throw InvalidArgument("cube: widths must be positive");
    half[i] = half_widths[static_cast<std::size_t>(i)];
  }
  const Box box{-half, half};
  TargetModel t;
  t.name = "cube";
  t.dim = d;
  attach_box_prior(t, box);
  t.energy = [box](const Point& x) { return box.contains(x) ? 0.0 : kInf; };
  t.exact_log_z = 0.0;
  return t;
}

TargetModel cube_level_set(int d, double side) {
  if (d < 1) throw InvalidArgument("cube: dimension must be positive");
  return cube_level_set(std::vector<double>(static_cast<std::size_t>(d), 0.5 * side));
}

TargetModel interval_target(double lo, double hi) {
  if (!(lo < hi)) throw InvalidArgument("interval: need lo < hi");
  const Box box{Point::Constant(1, lo), Point::Constant(1, hi)};
  TargetModel t;
  t.name = "interval";
  t.dim = 1;
  attach_box_prior(t, box);
  t.energy = [](const Point&) { return 0.0; };
  t.exact_log_z = 0.0;
  return t;
}

}  // namespace nss
