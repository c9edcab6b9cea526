#include "doctest.h"

#include <boost/math/special_functions/bessel.hpp>

#include <cmath>
#include <vector>

#include "nss/numeric.hpp"
#include "nss/targets.hpp"

using namespace nss;

namespace {

const double kPi = 3.14159265358979323846;

template <class F>
double simpson(F f, double a, double b, int n) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

// log Z of the alpha likelihood from composite Simpson rules with n panels per unit length.
double alpha_log_z_simpson(const AlphaLikelihoodSpec& s, int n) {
  const int panels = 2 * static_cast<int>(std::ceil(s.r * n));
  const double gauss = simpson([](double x) { return std::exp(-0.5 * x * x); }, -s.r, s.r, panels);
  const double A = s.A;
  const double cosine = simpson([A](double x) { return std::exp(A * (std::cos(2.0 * kPi * x) - 1.0)); }, -s.r, s.r,
                                panels);
  double z = 0.0;
  if (s.alpha > 0.0) z += s.alpha * std::pow(gauss, s.d);
  if (s.alpha < 1.0) z += (1.0 - s.alpha) * std::pow(cosine, s.d);
  return std::log(z) - s.d * std::log(2.0 * s.r);
}

}  // namespace

TEST_CASE("bundled mixtures have the box-area evidence") {
  const TargetModel mog40 = mog_target(mog40_spec());
  CHECK(std::abs(*mog40.exact_log_z + std::log(1e4)) < 1e-6);
  CHECK(std::abs(*mog40.exact_log_z - (-9.2103)) < 1e-4);
  const TargetModel mog10 = mog_target(mog10_spec());
  CHECK(std::abs(*mog10.exact_log_z + 10.0 * std::log(100.0)) < 1e-6);
  CHECK(std::abs(*mog10.exact_log_z - (-46.052)) < 1e-3);
  CHECK(mog40.dim == 2);
  CHECK(mog10.dim == 10);
}

TEST_CASE("single component in a huge box") {
  MixtureSpec s;
  s.prior_box = Box{Point::Constant(2, -1e3), Point::Constant(2, 1e3)};
  s.weights = {1.0};
  s.means = {Point{{1.0, -2.0}}};
  Matrix cov(2, 2);
  cov << 2.0, 0.5, 0.5, 1.0;
  s.covs = {cov};
  const TargetModel t = mog_target(s);
  CHECK(*t.exact_log_z == doctest::Approx(-std::log(4e6)).epsilon(1e-9));
  // Energy is the negative Gaussian log density.
  const Point x{{0.3, 0.1}};
  const Point dx = x - s.means[0];
  const double log_pdf = -std::log(2.0 * kPi) - 0.5 * std::log(cov.determinant()) - 0.5 * dx.dot(cov.inverse() * dx);
  CHECK(t.energy(x) == doctest::Approx(-log_pdf).epsilon(1e-12));
}

TEST_CASE("mixture spec validation") {
  MixtureSpec s = mog40_spec();
  s.weights[0] += 0.1;
  CHECK_THROWS_AS(mog_target(s), InvalidArgument);
  s = mog40_spec();
  s.means[3] = Point{{60.0, 0.0}};
  CHECK_THROWS_AS(mog_target(s), InvalidArgument);
  s = mog40_spec();
  s.covs.pop_back();
  CHECK_THROWS_AS(mog_target(s), InvalidArgument);
}

TEST_CASE("MoG reference sampler: component frequencies match the weights") {
  const MixtureSpec spec = mog10_spec();
  const TargetModel t = mog_target(spec);
  const int n = 100000;
  std::vector<int> counts(spec.weights.size(), 0);
  RngStream rng(1);
  for (int i = 0; i < n; ++i) {
    const Point x = t.reference_sample(rng);
    // Modes are tens of standard deviations apart, so the nearest mean identifies the component.
    std::size_t best = 0;
    double best_d = kInf;
    for (std::size_t j = 0; j < spec.means.size(); ++j) {
      const double dist = (spec.covs[j].diagonal().cwiseInverse().asDiagonal() * (x - spec.means[j]).cwiseAbs2()).sum();
      if (dist < best_d) {
        best_d = dist;
        best = j;
      }
    }
    ++counts[best];
  }
  for (std::size_t j = 0; j < counts.size(); ++j) {
    const double w = spec.weights[j];
    CHECK(std::abs(counts[j] / double(n) - w) < 3.0 * std::sqrt(w * (1.0 - w) / n));
  }
}

TEST_CASE("funnel density at the origin and symmetry") {
  const TargetModel t = funnel_target(10);
  const double log_density = -(std::log(3.0) + 0.5 * std::log(2.0 * kPi)) + 9.0 * (-0.5 * std::log(2.0 * kPi));
  CHECK(log_density == doctest::Approx(-10.288).epsilon(1e-4));
  CHECK(t.energy(Point::Zero(10)) == doctest::Approx(-log_density).epsilon(1e-14));
  CHECK(t.log_prior(Point::Zero(10)) == doctest::Approx(-10.0 * std::log(40.0)));
  CHECK_FALSE(t.exact_log_z.has_value());

  RngStream rng(2);
  for (int i = 0; i < 100; ++i) {
    Point p = t.prior_sample(rng);
    Point q = p;
    q.tail(9) = -q.tail(9);
    CHECK(t.energy(p) == t.energy(q));
  }
  CHECK_THROWS_AS(funnel_target(1), InvalidArgument);
}

TEST_CASE("funnel reference sampler has Var(y) = 9") {
  // A box wide enough that truncation never bites.
  const TargetModel t = funnel_target(10, -1e8, 1e8);
  RngStream rng(3);
  const int n = 100000;
  std::vector<double> y;
  std::vector<double> x1;
  for (int i = 0; i < n; ++i) {
    const Point p = t.reference_sample(rng);
    y.push_back(p[0]);
    x1.push_back(p[1] * std::exp(-0.5 * p[0]));
  }
  const MeanStd ys = mean_std(y);
  CHECK(std::abs(ys.std * ys.std - 9.0) < 3.0 * 9.0 * std::sqrt(2.0 / n));
  CHECK(std::abs(ys.mean) < 3.0 * 3.0 / std::sqrt(n));
  const MeanStd zs = mean_std(x1);
  CHECK(std::abs(zs.std * zs.std - 1.0) < 3.0 * std::sqrt(2.0 / n));
}

TEST_CASE("alpha target: one-dimensional evidence values") {
  AlphaLikelihoodSpec s;
  s.d = 1;
  s.alpha = 1.0;
  const double gauss = std::sqrt(2.0 * kPi) * std::erf(s.r / std::sqrt(2.0));
  CHECK(alpha_exact_log_z(s) == doctest::Approx(std::log(gauss / (2.0 * s.r))).epsilon(1e-12));
  CHECK(std::abs(alpha_exact_log_z(s) - (-1.4113)) < 1e-4);

  s.alpha = 0.0;
  // Ten whole periods contribute 10 I0(A); the two end pieces are mirror images of [0, 0.14].
  const double ends = simpson([&](double x) { return std::exp(s.A * std::cos(2.0 * kPi * x)); }, 0.0, s.r - 5.0, 20000);
  const double cosine = 10.0 * boost::math::cyl_bessel_i(0, s.A) + 2.0 * ends;
  CHECK(alpha_log_cosine_integral(s.r, s.A) == doctest::Approx(std::log(cosine)).epsilon(1e-12));
  const double expected = -s.A + std::log(cosine) - std::log(2.0 * s.r);
  CHECK(alpha_exact_log_z(s) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(std::abs(alpha_exact_log_z(s) - (-1.990057)) < 1e-5);

  CHECK(*alpha_target(s).exact_log_z == alpha_exact_log_z(s));
  s.alpha = 1.5;
  CHECK_THROWS_AS(alpha_target(s), InvalidArgument);
}

TEST_CASE("alpha target: evidence matches refined Simpson rules") {
  for (int d : {1, 2, 4, 10}) {
    for (double alpha : {0.0, 0.5, 1.0}) {
      AlphaLikelihoodSpec s;
      s.d = d;
      s.alpha = alpha;
      const double coarse = alpha_log_z_simpson(s, 2000);
      const double fine = alpha_log_z_simpson(s, 4000);
      CHECK(std::abs(coarse - fine) < 1e-6);
      CHECK(std::abs(alpha_exact_log_z(s) - fine) < 1e-6);
    }
  }
}

TEST_CASE("alpha target: energy is -log L") {
  AlphaLikelihoodSpec s;
  s.d = 3;
  s.alpha = 0.3;
  const TargetModel t = alpha_target(s);
  const Point th{{0.2, -1.1, 0.45}};
  double cos_sum = 0.0;
  for (int i = 0; i < 3; ++i) cos_sum += std::cos(2.0 * kPi * th[i]);
  const double l = 0.3 * std::exp(-0.5 * th.squaredNorm()) + 0.7 * std::exp(-s.A * 3 + s.A * cos_sum);
  CHECK(t.energy(th) == doctest::Approx(-std::log(l)).epsilon(1e-12));
  CHECK(t.log_prior(Point::Constant(3, 5.2)) == -kInf);
}

TEST_CASE("level sets") {
  const TargetModel ball = level_set_target(EllipsoidSpec::unit_ball(3));
  CHECK(*ball.exact_log_z == doctest::Approx(std::log(kPi / 6.0)).epsilon(1e-12));
  RngStream rng(4);
  const int n = 100000;
  int inside = 0;
  for (int i = 0; i < n; ++i) inside += std::isfinite(ball.energy(ball.prior_sample(rng)));
  const double p = kPi / 6.0;
  CHECK(std::abs(inside / double(n) - p) < 3.0 * std::sqrt(p * (1 - p) / n));

  const TargetModel shrunk = level_set_target(EllipsoidSpec::shrunk_axes(4, 0.1));
  CHECK(shrunk.energy(Point{{0.05, 0.0, 0.0, 0.0}}) == 0.0);
  CHECK(shrunk.energy(Point{{0.15, 0.0, 0.0, 0.0}}) == kInf);
  CHECK(shrunk.energy(Point{{0.0, 0.0, 0.9, 0.0}}) == 0.0);

  const TargetModel cube = cube_level_set(3, 2.0);
  for (int i = 0; i < 1000; ++i) {
    Point x(3);
    for (int j = 0; j < 3; ++j) x[j] = rng.uniform(-1.5, 1.5);
    const bool in = (x.array().abs() <= 1.0).all();
    CHECK((cube.energy(x) == 0.0) == in);
  }
}

TEST_CASE("prior samples land in the support of every bundled target") {
  AlphaLikelihoodSpec alpha;
  alpha.d = 4;
  alpha.alpha = 0.5;
  const std::vector<TargetModel> targets{
      mog_target(mog40_spec()),       mog_target(mog10_spec()),  funnel_target(10),
      alpha_target(alpha),            cube_level_set(5, 1.0),    level_set_target(EllipsoidSpec::unit_ball(6)),
      interval_target(-2.0, 3.0)};
  for (const TargetModel& t : targets) {
    RngStream rng(5, {Phase::kUser, 0, static_cast<std::uint64_t>(t.dim)});
    int bad = 0;
    for (int i = 0; i < 100000; ++i) {
      const Point x = t.prior_sample(rng);
      bad += !(x.size() == t.dim && t.log_prior(x) > -kInf);
    }
    CHECK_MESSAGE(bad == 0, t.name);
    REQUIRE(t.prior_box.has_value());
    CHECK(t.log_prior(t.prior_box->lo) == doctest::Approx(-t.prior_box->log_volume()));
  }
}
