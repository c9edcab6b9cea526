#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nss/numeric.hpp"
#include "nss/reflective.hpp"
#include "nss/targets.hpp"

using namespace nss;

namespace {

// Energy |x|^2 / 2 with a gradient, flat prior on [-half, half]^d. With
// e_min = 0.5 the constraint is the unit ball.
TargetModel bowl(int d, double half = 5.0) {
  TargetModel t;
  t.name = "bowl";
  t.dim = d;
  Box box{Point::Constant(d, -half), Point::Constant(d, half)};
  const double log_vol = box.log_volume();
  t.prior_box = box;
  t.log_prior = [box, log_vol](const Point& x) { return box.contains(x) ? -log_vol : -kInf; };
  t.energy = [](const Point& x) { return 0.5 * x.squaredNorm(); };
  t.energy_grad = [](const Point& x) { return x; };
  t.prior_sample = [box](RngStream& r) {
    Point x(box.dim());
    for (int i = 0; i < x.size(); ++i) x[i] = box.lo[i] + (box.hi[i] - box.lo[i]) * r.uniform();
    return x;
  };
  return t;
}

SliceState at(const TargetModel& t, const Point& x) { return SliceState{x, t.log_prior(x), t.energy(x)}; }

const std::vector<ConstrainedSampler> kReflective{ConstrainedSampler::kGMC, ConstrainedSampler::kGMC2019,
                                                  ConstrainedSampler::kRSS};

// Kolmogorov-Smirnov distance of r^2 (uniform on [0, 1] for the unit disk).
double ks_uniform(std::vector<double> u) {
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double d = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    d = std::max(d, std::max((i + 1) / n - u[i], u[i] - i / n));
  }
  return d;
}

}  // namespace

TEST_CASE("reflect: examples and Householder identities") {
  CHECK(reflect(Point{{1.0, 0.0}}, Point{{1.0, 0.0}}).isApprox(Point{{-1.0, 0.0}}));
  CHECK(reflect(Point{{1.0, 0.0}}, Point{{0.0, 1.0}}) == Point{{1.0, 0.0}});
  CHECK_THROWS_AS(reflect(Point{{1.0, 0.0}}, Point::Zero(2)), InvalidArgument);

  RngStream r(1);
  for (int i = 0; i < 10000; ++i) {
    const int d = 1 + static_cast<int>(r.below(6));
    Point v(d);
    Point g(d);
    for (int j = 0; j < d; ++j) {
      v[j] = r.normal();
      g[j] = r.normal();
    }
    const Point n = g / g.norm();
    const Point w = reflect(v, g);
    REQUIRE(std::abs(w.norm() - v.norm()) < 1e-12 * std::max(1.0, v.norm()));
    REQUIRE(std::abs(w.dot(n) + v.dot(n)) < 1e-12 * std::max(1.0, v.norm()));
    REQUIRE((reflect(w, g) - v).norm() < 1e-12 * std::max(1.0, v.norm()));
  }
}

TEST_CASE("per-step probe counts follow the algorithm structure") {
  const TargetModel t = bowl(3);
  ReflectConfig c;
  c.eps = 0.4;
  c.n_traj = 50;
  const std::vector<std::pair<ConstrainedSampler, std::vector<int>>> allowed{
      {ConstrainedSampler::kGMC, {1, 2}}, {ConstrainedSampler::kGMC2019, {1, 4}}, {ConstrainedSampler::kRSS, {1, 2}}};
  for (const auto& [sampler, counts] : allowed) {
    RngStream rng(2);
    const ChainResult r = run_chain(sampler, at(t, Point::Zero(3)), 0.5, t, c, rng, true);
    REQUIRE(r.step_evals.size() == static_cast<std::size_t>(r.steps));
    std::int64_t total = 0;
    std::vector<int> seen(5, 0);
    for (int e : r.step_evals) {
      CHECK_MESSAGE(std::find(counts.begin(), counts.end(), e) != counts.end(), to_string(sampler));
      total += e;
      seen[static_cast<std::size_t>(std::min(e, 4))]++;
    }
    CHECK(total == r.evals);
    for (int e : counts) CHECK_MESSAGE(seen[static_cast<std::size_t>(e)] > 0, to_string(sampler));
    // One forward probe per step; the rest are boundary probes.
    CHECK(r.inside == seen[1]);
  }
}

TEST_CASE("a huge step leaves the position unchanged") {
  const TargetModel t = bowl(2);
  ReflectConfig c;
  c.eps = 1e6;
  c.n_traj = 5;
  const Point x0{{0.1, -0.2}};
  for (ConstrainedSampler s : kReflective) {
    RngStream rng(3);
    const ChainResult r = run_chain(s, at(t, x0), 0.5, t, c, rng);
    CHECK_MESSAGE(r.state.x == x0, to_string(s));
    CHECK(r.inside == 0);
  }
}

TEST_CASE("GMC2019 North branch advances by eps v") {
  const TargetModel t = bowl(3);
  ReflectConfig c;
  c.eps = 1e-3;
  c.l_traj = 1;
  c.n_traj = 1;
  const Point x0{{0.1, 0.2, -0.1}};
  RngStream rng(4);
  RngStream copy = rng;
  Point v(3);
  for (int i = 0; i < 3; ++i) v[i] = copy.normal();
  const ChainResult r = gmc2019_chain(at(t, x0), 0.5, t, c, rng, true);
  CHECK((r.state.x - (x0 + c.eps * v)).norm() < 1e-15);
  CHECK(r.step_evals == std::vector<int>{1});
  CHECK(r.grad_evals == 0);
}

TEST_CASE("RSS: ballistic trajectory endpoint") {
  const TargetModel t = bowl(4, 100.0);
  ReflectConfig c;
  c.eps = 0.01;
  c.n_traj = 1;
  RngStream rng(5);
  RngStream copy = rng;
  Point v(4);
  for (int i = 0; i < 4; ++i) v[i] = copy.normal();
  const Point x0 = Point::Zero(4);
  const ChainResult r = rss_chain(at(t, x0), 1e9, t, c, rng);
  CHECK((r.state.x - (x0 + c.l_traj * c.eps * v)).norm() < 1e-12);
  CHECK(r.accept_rate() == 1.0);
}

TEST_CASE("RSS: a successful reflection continues with the reflected velocity") {
  const TargetModel t = bowl(1);
  // Pick a seed whose first velocity points towards the near boundary at 0.9.
  std::uint64_t seed = 0;
  double v = 0.0;
  do {
    RngStream probe(++seed);
    v = probe.normal();
  } while (v <= 0.0);
  ReflectConfig c;
  c.eps = 0.15 / v;
  c.l_traj = 2;
  c.n_traj = 1;
  RngStream rng(seed);
  const ChainResult r = rss_chain(at(t, Point::Constant(1, 0.9)), 0.5, t, c, rng, true);
  // 0.9 -> 1.05 (outside) -> reflected back to 0.9 -> 0.75.
  CHECK(r.state.x[0] == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(r.step_evals == std::vector<int>{2, 1});
  CHECK(r.grad_evals == 1);
}

TEST_CASE("adjust_eps follows the acceptance band") {
  const ReflectConfig c;
  CHECK(adjust_eps(1.0, 0.1, c) == doctest::Approx(1.0 / 1.25));
  CHECK(adjust_eps(1.0, 0.4, c) == 1.0);
  CHECK(adjust_eps(1.0, 0.9, c) == doctest::Approx(1.25));
  CHECK(adjust_eps(1.0, 0.25, c) == 1.0);
  CHECK(adjust_eps(1.0, 0.5, c) == 1.0);
}

TEST_CASE("tune_eps reaches the band or reports non-convergence") {
  const TargetModel t = bowl(5);
  for (ConstrainedSampler s : kReflective) {
    ReflectConfig c;
    c.eps = 20.0;
    c.l_traj = 200;
    // Off-centre: the 2019 variant takes the normal at the current point, and grad E vanishes at 0.
    const Point x0 = Point::Constant(5, 0.1);
    RngStream rng(6);
    const EpsTuning tuned = tune_eps(s, at(t, x0), 0.5, t, c, rng);
    CHECK_MESSAGE(tuned.converged, to_string(s));
    CHECK(tuned.adjustments > 0);
    CHECK(tuned.eps < c.eps);

    c.max_adjust = 0;
    RngStream rng2(6);
    const EpsTuning stuck = tune_eps(s, at(t, x0), 0.5, t, c, rng2);
    CHECK_FALSE(stuck.converged);
    CHECK(stuck.eps == c.eps);
  }
}

TEST_CASE("reflective samplers need a gradient and a valid start") {
  TargetModel t = bowl(2);
  const ReflectConfig c;
  RngStream rng(7);
  CHECK_THROWS_AS(gmc_chain(at(t, Point{{2.0, 0.0}}), 0.5, t, c, rng), InvalidArgument);
  t.energy_grad = nullptr;
  for (ConstrainedSampler s : kReflective) {
    CHECK_THROWS_AS(run_chain(s, at(t, Point::Zero(2)), 0.5, t, c, rng), InvalidArgument);
  }
  CHECK_THROWS_AS(run_chain(ConstrainedSampler::kSS, at(bowl(2), Point::Zero(2)), 0.5, bowl(2), c, rng),
                  InvalidArgument);
  CHECK(parse_sampler("gmc2019") == ConstrainedSampler::kGMC2019);
  CHECK(to_string(ConstrainedSampler::kRSS) == "RSS");
  CHECK_THROWS_AS(parse_sampler("HMC"), InvalidArgument);
}

TEST_CASE("final points stay inside the constraint") {
  AlphaLikelihoodSpec spec;
  spec.alpha = 0.5;
  spec.d = 3;
  const std::vector<TargetModel> targets{bowl(3), alpha_target(spec)};
  for (const TargetModel& t : targets) {
    for (ConstrainedSampler s : kReflective) {
      ReflectConfig c;
      c.eps = 0.3;
      c.n_traj = 10;
      for (std::uint64_t i = 0; i < 50; ++i) {
        RngStream rng(8, {Phase::kUser, 0, i});
        Point x0 = t.prior_sample(rng);
        const double e_min = t.energy(x0) + 0.5;
        const ChainResult r = run_chain(s, at(t, x0), e_min, t, c, rng);
        REQUIRE(r.state.energy < e_min);
        REQUIRE(r.state.energy == t.energy(r.state.x));
        REQUIRE(r.state.log_prior > -kInf);
      }
    }
  }
}

TEST_CASE("GMC and GMC2019 sample the unit disk uniformly") {
  const TargetModel t = bowl(2);
  for (ConstrainedSampler s : {ConstrainedSampler::kGMC, ConstrainedSampler::kGMC2019}) {
    ReflectConfig c;
    c.eps = 0.3;
    c.n_traj = 1;
    RngStream rng(9, {Phase::kUser, 0, static_cast<std::uint64_t>(s)});
    SliceState x = at(t, Point::Zero(2));
    std::vector<double> r2;
    for (int i = 0; i < 100000; ++i) {
      x = run_chain(s, x, 0.5, t, c, rng).state;
      r2.push_back(x.x.squaredNorm());
    }
    CHECK_MESSAGE(ks_uniform(r2) < 0.02, to_string(s));
  }
}

TEST_CASE("constrained kernels honour the threshold") {
  const TargetModel t = bowl(3);
  const CovarianceMetric metric = CovarianceMetric::identity(3);
  ReflectConfig c;
  c.n_traj = 5;
  for (ConstrainedSampler s : {ConstrainedSampler::kGMC, ConstrainedSampler::kGMC2019, ConstrainedSampler::kRSS,
                               ConstrainedSampler::kSS}) {
    const ReplacementKernel k = constrained_kernel(s, c, 3);
    RngStream rng(10);
    const Replacement r = k.replace(at(t, Point{{0.1, 0.1, 0.1}}), 0.5, metric, t, rng);
    CHECK_MESSAGE(r.energy < 0.5, to_string(s));
    CHECK(r.calls > 0);
    CHECK(static_cast<bool>(k.after_batch) == (s != ConstrainedSampler::kSS));
  }
}

TEST_CASE("evidence comparison: GMC agrees at d=2, RSS is biased at d=4") {
  ReflectConfig c;
  const EvidenceComparison gmc = compare_evidence(ConstrainedSampler::kGMC, 1.0, 2, c, 11);
  CHECK(std::abs(gmc.log_z - gmc.oracle_log_z) < 3.0 * gmc.geo_std);
  const EvidenceComparison rss = compare_evidence(ConstrainedSampler::kRSS, 1.0, 4, c, 12);
  CHECK(std::abs(rss.log_z - rss.oracle_log_z) > 3.0 * rss.geo_std);
  CHECK(rss.evals > 0);
  CHECK(rss.iterations > 0);
}
