#include "doctest.h"

#include <cmath>
#include <vector>

#include "nss/numeric.hpp"
#include "nss/smc.hpp"
#include "nss/targets.hpp"

using namespace nss;

namespace {

// Quadratic energy 0.5 x^T P x under a flat prior on [-half, half]^d.
TargetModel gaussian_box_target(const Matrix& precision, double half) {
  const int d = static_cast<int>(precision.rows());
  TargetModel t;
  t.name = "gauss";
  t.dim = d;
  Box box{Point::Constant(d, -half), Point::Constant(d, half)};
  const double log_vol = box.log_volume();
  t.prior_box = box;
  t.log_prior = [box, log_vol](const Point& x) { return box.contains(x) ? -log_vol : -kInf; };
  t.energy = [precision](const Point& x) { return 0.5 * x.dot(precision * x); };
  t.prior_sample = [box](RngStream& r) {
    Point x(box.dim());
    for (int i = 0; i < x.size(); ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * r.uniform();
    return x;
  };
  return t;
}

TargetModel std_normal_1d(double half) { return gaussian_box_target(Matrix::Identity(1, 1), half); }

SliceState state_at(const TargetModel& t, const Point& x) { return SliceState{x, t.log_prior(x), t.energy(x)}; }

// Mean of f over a chain and its batch-means standard error.
struct ChainMoment {
  double mean;
  double se;
};

ChainMoment batch_moment(const std::vector<double>& f, int batches = 100) {
  const std::size_t len = f.size() / static_cast<std::size_t>(batches);
  std::vector<double> means;
  for (int b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < len; ++i) s += f[static_cast<std::size_t>(b) * len + i];
    means.push_back(s / static_cast<double>(len));
  }
  const MeanStd ms = mean_std(means);
  return {ms.mean, ms.std / std::sqrt(double(batches))};
}

}  // namespace

TEST_CASE("next_temperature: two particles solve the quadratic") {
  const std::vector<double> e{0.0, 1.0};
  CHECK(next_temperature(e, 0.0, 0.9) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
  // ESS of weights {1, 1/2} is 1.8.
  CHECK(incremental_ess(e, std::log(2.0)) == doctest::Approx(1.8).epsilon(1e-12));
}

TEST_CASE("next_temperature: equal energies jump straight to one") {
  const std::vector<double> e(50, 3.7);
  CHECK(next_temperature(e, 0.0, 0.9) == 1.0);
  CHECK(next_temperature(e, 0.6, 0.5) == 1.0);
  CHECK_THROWS_AS(next_temperature(e, 1.0, 0.5), InvalidArgument);
  CHECK_THROWS_AS(next_temperature(e, 0.0, 1.0), InvalidArgument);
}

TEST_CASE("next_temperature: monotone in rho and ESS on target") {
  RngStream r(21);
  std::vector<double> e;
  for (int i = 0; i < 500; ++i) e.push_back(50.0 * r.uniform() * r.uniform());
  double last = kInf;
  for (double rho = 0.05; rho < 0.999; rho += 0.05) {
    const double b = next_temperature(e, 0.0, rho);
    CHECK(b <= last);
    last = b;
    if (b < 1.0) CHECK(incremental_ess(e, b) == doctest::Approx(rho * 500.0).epsilon(0.01));
  }
}

TEST_CASE("next_temperature: tiny increments under a huge energy spread") {
  // One low-energy particle among 999 at 1e12: ESS = 970 at q = exp(-1e12 dbeta) ~ 0.15, so dbeta ~ 2e-12.
  std::vector<double> e(999, 1e12);
  e.push_back(0.0);
  const double b = next_temperature(e, 0.0, 0.97);
  CHECK(b > 0.0);
  CHECK(b < 1e-11);
  CHECK(incremental_ess(e, b) == doctest::Approx(970.0).epsilon(1e-6));
  // A particle with +inf energy drops out at any positive increment, so no increment keeps ESS >= 0.9999 m.
  std::vector<double> with_inf(1999, 1.0);
  with_inf.push_back(kInf);
  CHECK_THROWS_AS(next_temperature(with_inf, 0.0, 0.9999), RuntimeError);
}

TEST_CASE("incremental ESS ignores infinite energies and rejects NaN") {
  const std::vector<double> e{0.0, 0.0, kInf};
  CHECK(incremental_ess(e, 0.5) == doctest::Approx(2.0));
  const std::vector<double> bad{0.0, std::nan("")};
  CHECK_THROWS_AS(incremental_ess(bad, 0.5), RuntimeError);
}

TEST_CASE("tempered_log_density") {
  CHECK(tempered_log_density(-1.0, 2.0, 0.25) == -1.5);
  CHECK(tempered_log_density(-kInf, 2.0, 0.25) == -kInf);
  CHECK(tempered_log_density(-1.0, kInf, 0.0) == -kInf);
}

TEST_CASE("smc_stage: equal energies give an exact log Z increment") {
  TargetModel t = interval_target(0.0, 1.0);
  t.energy = [](const Point&) { return 2.5; };
  SmcConfig c;
  c.m = 50;
  SmcState s = smc_init(t, c, 3);
  smc_stage(s, c, t);
  CHECK(s.beta == 1.0);
  CHECK(s.log_z == doctest::Approx(-2.5).epsilon(1e-14));
  CHECK_THROWS_AS(smc_stage(s, c, t), InvalidArgument);
}

TEST_CASE("gaussian proposal: density and singular covariance") {
  Matrix cov(2, 2);
  cov << 2.0, 0.3, 0.3, 1.0;
  const GaussianProposal q(Point{{1.0, -1.0}}, cov);
  const Point x{{0.5, 0.2}};
  const Point dx = x - q.mean();
  const double expected = -std::log(2.0 * M_PI) - 0.5 * std::log(cov.determinant()) - 0.5 * dx.dot(cov.inverse() * dx);
  CHECK(q.log_density(x) == doctest::Approx(expected).epsilon(1e-12));

  Matrix sing(2, 2);
  sing << 1.0, 1.0, 1.0, 1.0;
  CHECK_THROWS_AS(GaussianProposal(Point::Zero(2), sing), InvalidArgument);
  CHECK_THROWS_AS(GaussianProposal(Point::Zero(3), cov), InvalidArgument);
}

TEST_CASE("mutate_rw at beta 0 accepts exactly the proposals inside the box") {
  const TargetModel t = interval_target(0.0, 1.0);
  const GaussianProposal step(Point::Zero(1), Matrix::Identity(1, 1));
  const int n = 40000;
  int accepted = 0;
  for (int i = 0; i < n; ++i) {
    RngStream rng(4, {Phase::kUser, 0, static_cast<std::uint64_t>(i)});
    accepted += mutate_rw(state_at(t, Point::Constant(1, 0.5)), 0.0, t, step, 1, rng).accepted;
  }
  const double p = std::erf(0.5 / std::sqrt(2.0));  // P(|z| < 1/2)
  CHECK(std::abs(double(accepted) / n - p) < 4.0 * std::sqrt(p * (1 - p) / n));
}

TEST_CASE("mutate_rw on a 1-d normal: acceptance band and zero-density proposals") {
  const TargetModel t = std_normal_1d(100.0);
  const GaussianProposal step(Point::Zero(1), Matrix::Constant(1, 1, 2.38 * 2.38));
  RngStream rng(5);
  const MoveResult r = mutate_rw(state_at(t, Point::Zero(1)), 1.0, t, step, 10000, rng);
  CHECK(r.evals == 10000);
  const double rate = r.accepted / 10000.0;
  CHECK(rate >= 0.3);
  CHECK(rate <= 0.6);

  TargetModel half = t;
  half.energy = [](const Point& x) { return x[0] > 0.0 ? kInf : 0.5 * x[0] * x[0]; };
  RngStream rng2(6);
  SliceState s = state_at(half, Point::Constant(1, -0.1));
  for (int i = 0; i < 5000; ++i) {
    s = mutate_rw(s, 1.0, half, step, 1, rng2).state;
    REQUIRE(s.x[0] <= 0.0);
    REQUIRE(std::isfinite(s.energy));
  }
}

TEST_CASE("mutate_irmh: matched proposal always accepts") {
  const TargetModel t = std_normal_1d(100.0);
  const GaussianProposal fit(Point::Zero(1), Matrix::Identity(1, 1));
  RngStream rng(7);
  const MoveResult r = mutate_irmh(state_at(t, Point::Constant(1, 0.3)), 1.0, t, fit, 5000, rng);
  CHECK(r.accepted >= 4995);
}

TEST_CASE("mutate_irmh: mismatched proposal keeps the target mean") {
  const TargetModel t = std_normal_1d(100.0);
  const GaussianProposal fit(Point::Constant(1, 0.5), Matrix::Constant(1, 1, 4.0));
  RngStream rng(8);
  SliceState s = state_at(t, Point::Zero(1));
  std::vector<double> xs;
  int accepted = 0;
  for (int i = 0; i < 200000; ++i) {
    const MoveResult r = mutate_irmh(s, 1.0, t, fit, 1, rng);
    accepted += r.accepted;
    s = r.state;
    xs.push_back(s.x[0]);
  }
  CHECK(accepted < 200000);
  const ChainMoment mean = batch_moment(xs);
  CHECK(std::abs(mean.mean) < 3.0 * mean.se);
}

TEST_CASE("mutate_ss at beta 0 reduces to the constrained slice step") {
  const TargetModel t = interval_target(0.0, 1.0);
  SliceConfig cfg;
  cfg.width = 0.3;
  cfg.steps = 1;
  const CovarianceMetric metric = CovarianceMetric::identity(1);
  SliceState a = state_at(t, Point::Constant(1, 0.5));
  Point b = a.x;
  for (int i = 0; i < 2000; ++i) {
    RngStream ra(9, {Phase::kUser, 0, static_cast<std::uint64_t>(i)});
    RngStream rb = ra;
    a = mutate_ss(a, 0.0, t, metric, cfg, ra).state;
    const Point v = draw_direction(metric, rb);
    b = slice_step(b, v, kInf, t, cfg, rb).new_point;
    REQUIRE(a.x[0] == b[0]);
    REQUIRE(a.x[0] >= 0.0);
    REQUIRE(a.x[0] <= 1.0);
  }
}

TEST_CASE("mutate_ss on a 1-d normal has unit variance") {
  const TargetModel t = std_normal_1d(100.0);
  SliceConfig cfg;
  cfg.width = 2.0;
  cfg.steps = 1;
  const CovarianceMetric metric = CovarianceMetric::identity(1);
  RngStream rng(10);
  SliceState s = state_at(t, Point::Zero(1));
  std::vector<double> sq;
  for (int i = 0; i < 100000; ++i) {
    s = mutate_ss(s, 1.0, t, metric, cfg, rng).state;
    sq.push_back(s.x[0] * s.x[0]);
  }
  const ChainMoment var = batch_moment(sq);
  CHECK(std::abs(var.mean - 1.0) < 3.0 * var.se);
}

TEST_CASE("mutate_ss on the 10-d funnel stays finite within the caps") {
  const TargetModel t = funnel_target(10);
  SliceConfig cfg;
  cfg.steps = 10;
  const CovarianceMetric metric = CovarianceMetric::identity(10);
  const int per_step = 2 + 2 * cfg.max_stepout + cfg.max_shrink;
  for (std::uint64_t i = 0; i < 200; ++i) {
    RngStream rng(11, {Phase::kUser, 0, i});
    Point x = t.prior_sample(rng);
    x[0] = 0.0;  // keep the neck open enough for a finite start
    const SliceState start = state_at(t, x);
    REQUIRE(std::isfinite(start.energy));
    const MoveResult r = mutate_ss(start, 1.0, t, metric, cfg, rng);
    CHECK(r.evals <= static_cast<std::int64_t>(per_step) * cfg.steps);
    CHECK(r.state.x.allFinite());
    CHECK(std::isfinite(r.state.energy));
  }
}

TEST_CASE("mutation kernels leave a tempered 2-d Gaussian invariant") {
  Matrix sigma(2, 2);
  sigma << 1.0, 0.5, 0.5, 2.0;
  const double beta = 0.5;
  const TargetModel t = gaussian_box_target(sigma.inverse(), 50.0);
  const Matrix tempered = sigma / beta;
  const GaussianProposal rw(Point::Zero(2), 2.38 * 2.38 / 2.0 * tempered);
  const GaussianProposal irmh(Point{{0.3, -0.2}}, 1.5 * tempered);
  const CovarianceMetric metric = CovarianceMetric::from_covariance(tempered);
  SliceConfig slice;
  slice.steps = 1;

  for (SmcKernel kernel : {SmcKernel::kRW, SmcKernel::kIRMH, SmcKernel::kSS}) {
    RngStream rng(12, {Phase::kUser, 0, static_cast<std::uint64_t>(kernel)});
    SliceState s = state_at(t, Point::Zero(2));
    std::vector<double> x0, x1, x00, x11, x01;
    for (int i = 0; i < 200000; ++i) {
      switch (kernel) {
        case SmcKernel::kRW:
          s = mutate_rw(s, beta, t, rw, 1, rng).state;
          break;
        case SmcKernel::kIRMH:
          s = mutate_irmh(s, beta, t, irmh, 1, rng).state;
          break;
        case SmcKernel::kSS:
          s = mutate_ss(s, beta, t, metric, slice, rng).state;
          break;
      }
      x0.push_back(s.x[0]);
      x1.push_back(s.x[1]);
      x00.push_back(s.x[0] * s.x[0]);
      x11.push_back(s.x[1] * s.x[1]);
      x01.push_back(s.x[0] * s.x[1]);
    }
    const std::vector<std::pair<const std::vector<double>*, double>> moments{
        {&x0, 0.0}, {&x1, 0.0}, {&x00, tempered(0, 0)}, {&x11, tempered(1, 1)}, {&x01, tempered(0, 1)}};
    for (const auto& [f, truth] : moments) {
      const ChainMoment cm = batch_moment(*f);
      CHECK_MESSAGE(std::abs(cm.mean - truth) < 3.0 * cm.se + 1e-12, to_string(kernel));
    }
  }
}

TEST_CASE("Gaussian integral oracle over 10 seeds") {
  const double half = 100.0;
  const TargetModel t = std_normal_1d(half);
  const double truth = std::log(std::sqrt(2.0 * M_PI) / (2.0 * half));
  for (SmcKernel kernel : {SmcKernel::kRW, SmcKernel::kSS}) {
    SmcConfig c;
    c.kernel = kernel;
    std::vector<double> log_z;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) log_z.push_back(run_smc(t, c, seed).state.log_z);
    const MeanStd ms = mean_std(log_z);
    CHECK_MESSAGE(std::abs(ms.mean - truth) < 3.0 * ms.std / std::sqrt(10.0), to_string(kernel));
  }
}

TEST_CASE("ladders increase strictly to one on the bundled targets") {
  AlphaLikelihoodSpec alpha;
  alpha.alpha = 0.5;
  alpha.d = 2;
  const std::vector<TargetModel> targets{mog_target(mog40_spec()), mog_target(mog10_spec()), funnel_target(10),
                                         alpha_target(alpha), cube_level_set(3, 1.0)};
  for (const TargetModel& t : targets) {
    SmcConfig c;
    c.m = 200;
    c.kernel = SmcKernel::kSS;
    const SmcRun run = run_smc(t, c, 13);
    const SmcState& s = run.state;
    CHECK_MESSAGE(s.betas.back() == 1.0, t.name);
    CHECK(s.stage <= c.max_stages);
    CHECK(std::isfinite(s.log_z));
    REQUIRE(s.betas.size() == s.stage_ess.size() + 1);
    for (std::size_t i = 1; i < s.betas.size(); ++i) CHECK(s.betas[i] > s.betas[i - 1]);
    for (std::size_t i = 0; i + 1 < s.stage_ess.size(); ++i) {
      CHECK_MESSAGE(s.stage_ess[i] == doctest::Approx(c.ess_target * c.m).epsilon(0.01), t.name);
    }
  }
}

TEST_CASE("smc runs are identical across worker counts") {
  const TargetModel t = mog_target(mog40_spec());
  SmcConfig c;
  c.m = 300;
  c.kernel = SmcKernel::kSS;
  const SmcState a = run_smc(t, c, 14).state;
  c.workers = 3;
  const SmcState b = run_smc(t, c, 14).state;
  CHECK(a.log_z == b.log_z);
  CHECK(a.betas == b.betas);
  CHECK(a.eval_count == b.eval_count);
}

TEST_CASE("smc config validation and the stage cap") {
  SmcConfig c;
  c.ess_target = 1.0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = SmcConfig{};
  c.m = 1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  CHECK(SmcConfig{}.steps_for(4) == 20);
  c = SmcConfig{};
  c.kernel = SmcKernel::kSS;
  CHECK(c.steps_for(4) == 4);
  CHECK(c.scale_for(4) == doctest::Approx(2.38 * 2.38 / 4));
  CHECK(parse_smc_kernel("IRMH") == SmcKernel::kIRMH);
  CHECK_THROWS_AS(parse_smc_kernel("hmc"), InvalidArgument);

  c = SmcConfig{};
  c.m = 100;
  c.max_stages = 2;
  CHECK_THROWS_AS(run_smc(mog_target(mog40_spec()), c, 15), RuntimeError);
}
