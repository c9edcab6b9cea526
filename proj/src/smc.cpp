#include "nss/smc.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "nss/metrics.hpp"
#include "nss/numeric.hpp"
#include "nss/parallel.hpp"

namespace nss {

namespace {

constexpr double kLog2Pi = 1.8378770664093454836;

// Log incremental weights -dbeta * E_i.
std::vector<double> log_increments(std::span<const double> energies, double dbeta) {
  std::vector<double> lw(energies.size());
  for (std::size_t i = 0; i < energies.size(); ++i) {
    const double e = energies[i];
    if (std::isnan(e)) throw RuntimeError("smc: NaN energy");
    lw[i] = e == kInf ? -kInf : -dbeta * e;
  }
  return lw;
}

double ess_of_log_weights(const std::vector<double>& lw) {
  const double hi = *std::max_element(lw.begin(), lw.end());
  if (hi == -kInf) throw RuntimeError("smc: all incremental weights are zero");
  double s = 0.0;
  double s2 = 0.0;
  for (double v : lw) {
    const double w = std::exp(v - hi);
    s += w;
    s2 += w * w;
  }
  return s * s / s2;
}

SliceState evaluate(const TargetModel& target, Point x) {
  SliceState s{std::move(x), 0.0, kInf};
  s.log_prior = target.log_prior(s.x);
  if (std::isnan(s.log_prior)) throw RuntimeError("log_prior returned NaN");
  if (s.log_prior == -kInf) return s;
  s.energy = target.energy(s.x);
  if (std::isnan(s.energy)) throw RuntimeError("energy returned NaN");
  return s;
}

}  // namespace

SmcKernel parse_smc_kernel(const std::string& name) {
  if (name == "rw" || name == "RW") return SmcKernel::kRW;
  if (name == "irmh" || name == "IRMH") return SmcKernel::kIRMH;
  if (name == "ss" || name == "SS") return SmcKernel::kSS;
  throw InvalidArgument("unknown SMC kernel '" + name + "' (expected rw, irmh or ss)");
}

std::string to_string(SmcKernel kernel) {
  switch (kernel) {
    case SmcKernel::kRW:
      return "rw";
    case SmcKernel::kIRMH:
      return "irmh";
    case SmcKernel::kSS:
      return "ss";
  }
  return "?";
}

int SmcConfig::steps_for(int dim) const {
  if (inner_steps > 0) return inner_steps;
  return kernel == SmcKernel::kSS ? dim : 5 * dim;
}

double SmcConfig::scale_for(int dim) const { return rw_scale > 0.0 ? rw_scale : 2.38 * 2.38 / dim; }

void SmcConfig::validate() const {
  if (m < 2) throw InvalidArgument("smc: m must be >= 2");
  if (!(ess_target > 0.0 && ess_target < 1.0)) throw InvalidArgument("smc: ess_target must lie in (0, 1)");
  if (inner_steps < 0) throw InvalidArgument("smc: inner_steps must be >= 0");
  if (rw_scale < 0.0) throw InvalidArgument("smc: rw_scale must be >= 0");
  if (max_stages < 1) throw InvalidArgument("smc: max_stages must be >= 1");
  if (!(cov_reg >= 0.0)) throw InvalidArgument("smc: cov_reg must be >= 0");
  if (workers < 1) throw InvalidArgument("smc: workers must be >= 1");
  slice.validate();
}

double incremental_ess(std::span<const double> energies, double dbeta) {
  return ess_of_log_weights(log_increments(energies, dbeta));
}

double next_temperature(std::span<const double> energies, double beta_t, double rho) {
  if (!(beta_t >= 0.0 && beta_t < 1.0)) throw InvalidArgument("next_temperature: beta must lie in [0, 1)");
  if (!(rho > 0.0 && rho < 1.0)) throw InvalidArgument("next_temperature: rho must lie in (0, 1)");
  if (energies.empty()) throw InvalidArgument("next_temperature: no particles");
  const double target = rho * static_cast<double>(energies.size());
  double hi = 1.0 - beta_t;
  if (incremental_ess(energies, hi) >= target) return 1.0;
  // Relative tolerance: heavy energy tails can need increments far below any fixed absolute gap.
  double lo = 0.0;
  for (int it = 0; it < 2000 && hi - lo > 1e-10 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (incremental_ess(energies, mid) >= target) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (!(lo > 0.0)) throw RuntimeError("next_temperature: no positive increment keeps the ESS target");
  return beta_t + lo;
}

double tempered_log_density(double log_prior, double energy, double beta) {
  if (log_prior == -kInf || energy == kInf) return -kInf;
  return log_prior - beta * energy;
}

GaussianProposal::GaussianProposal(Point mean, const Matrix& cov) : mean_(std::move(mean)) {
  if (cov.rows() != mean_.size() || cov.cols() != mean_.size() || mean_.size() == 0) {
    throw InvalidArgument("gaussian proposal: dimension mismatch");
  }
  Eigen::LLT<Matrix> llt(0.5 * (cov + cov.transpose()));
  if (llt.info() != Eigen::Success) throw InvalidArgument("gaussian proposal: covariance is not positive definite");
  chol_ = llt.matrixL();
  const Eigen::VectorXd diag = chol_.diagonal();
  if (!(diag.minCoeff() > 0.0) || diag.minCoeff() / diag.maxCoeff() < 1e-7) {
    throw InvalidArgument("gaussian proposal: covariance is singular");
  }
  log_norm_ = -0.5 * static_cast<double>(mean_.size()) * kLog2Pi - diag.array().log().sum();
}

Point GaussianProposal::sample_offset(RngStream& rng) const {
  Point z(mean_.size());
  for (int i = 0; i < z.size(); ++i) z[i] = rng.normal();
  return chol_.triangularView<Eigen::Lower>() * z;
}

Point GaussianProposal::sample(RngStream& rng) const { return mean_ + sample_offset(rng); }

double GaussianProposal::log_density(const Point& x) const {
  const Point z = chol_.triangularView<Eigen::Lower>().solve(x - mean_);
  return log_norm_ - 0.5 * z.squaredNorm();
}

MoveResult mutate_rw(const SliceState& particle, double beta, const TargetModel& target,
                     const GaussianProposal& step, int p, RngStream& rng) {
  MoveResult out{particle, 0, 0};
  double current = tempered_log_density(particle.log_prior, particle.energy, beta);
  for (int s = 0; s < p; ++s) {
    SliceState prop = evaluate(target, out.state.x + step.sample_offset(rng));
    ++out.evals;
    const double proposed = tempered_log_density(prop.log_prior, prop.energy, beta);
    const double log_u = std::log(rng.uniform());
    if (proposed > -kInf && log_u < proposed - current) {
      out.state = std::move(prop);
      current = proposed;
      ++out.accepted;
    }
  }
  return out;
}

MoveResult mutate_irmh(const SliceState& particle, double beta, const TargetModel& target,
                       const GaussianProposal& fit, int p, RngStream& rng) {
  MoveResult out{particle, 0, 0};
  double current = tempered_log_density(particle.log_prior, particle.energy, beta) - fit.log_density(particle.x);
  for (int s = 0; s < p; ++s) {
    Point y = fit.sample(rng);
    const double log_q = fit.log_density(y);
    SliceState prop = evaluate(target, std::move(y));
    ++out.evals;
    const double proposed = tempered_log_density(prop.log_prior, prop.energy, beta) - log_q;
    const double log_u = std::log(rng.uniform());
    if (proposed > -kInf && log_u < proposed - current) {
      out.state = std::move(prop);
      current = proposed;
      ++out.accepted;
    }
  }
  return out;
}

MoveResult mutate_ss(const SliceState& particle, double beta, const TargetModel& target,
                     const CovarianceMetric& metric, const SliceConfig& cfg, RngStream& rng) {
  const double start = tempered_log_density(particle.log_prior, particle.energy, beta);
  if (start == -kInf || std::isnan(start)) throw InvalidArgument("mutate_ss: start has zero tempered density");
  MoveResult out{particle, 0, 0};
  double current = start;
  for (int s = 0; s < cfg.steps; ++s) {
    const Point v = draw_direction(metric, rng);
    const double height = current + std::log(rng.uniform());
    SliceState probe;
    double probe_density = -kInf;
    auto in_slice = [&](double t) {
      probe = evaluate(target, out.state.x + t * v);
      probe_density = tempered_log_density(probe.log_prior, probe.energy, beta);
      return probe_density >= height;
    };
    const LineSliceOutcome line =
        slice_along_line(in_slice, effective_width(cfg, metric, v), cfg.max_stepout, cfg.max_shrink, rng);
    out.evals += line.n_calls;
    if (line.null_move) continue;
    out.state = std::move(probe);
    current = probe_density;
    ++out.accepted;
  }
  return out;
}

SmcState smc_init(const TargetModel& target, const SmcConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (target.dim < 1 || !target.log_prior || !target.energy || !target.prior_sample) {
    throw InvalidArgument("smc: incomplete target model");
  }
  SmcState state;
  state.seed = seed;
  const auto m = static_cast<std::size_t>(cfg.m);
  const std::int64_t budget = 100 * static_cast<std::int64_t>(cfg.m);
  std::int64_t attempts = 0;
  for (std::size_t i = 0; i < m; ++i) {
    RngStream rng(seed, StreamId{Phase::kInit, 0, i});
    for (;;) {
      if (++attempts > budget) throw RuntimeError("prior support mismatch: init rejection budget exhausted");
      SliceState s = evaluate(target, target.prior_sample(rng));
      if (s.log_prior > -kInf) ++state.eval_count;
      if (s.log_prior == -kInf || s.energy == kInf) continue;
      state.particles.push_back(std::move(s.x));
      state.energies.push_back(s.energy);
      state.log_priors.push_back(s.log_prior);
      break;
    }
  }
  return state;
}

void smc_stage(SmcState& state, const SmcConfig& cfg, const TargetModel& target) {
  if (state.beta >= 1.0) throw InvalidArgument("smc_stage: already at beta = 1");
  const std::size_t m = state.particles.size();
  const int d = target.dim;
  const double beta_next = next_temperature(state.energies, state.beta, cfg.ess_target);
  const double dbeta = beta_next - state.beta;

  const std::vector<double> lw = log_increments(state.energies, dbeta);
  const double log_sum = logsumexp(lw);
  if (std::isnan(log_sum)) throw RuntimeError("smc: NaN incremental weights");
  state.log_z += log_sum - std::log(static_cast<double>(m));
  std::vector<double> w(m);
  for (std::size_t i = 0; i < m; ++i) w[i] = std::exp(lw[i] - log_sum);
  state.stage_ess.push_back(kish_ess(w));

  // Weighted fit of the pre-resampling cloud.
  Point mean = Point::Zero(d);
  for (std::size_t i = 0; i < m; ++i) mean += w[i] * state.particles[i];
  Matrix cov = Matrix::Zero(d, d);
  for (std::size_t i = 0; i < m; ++i) {
    const Point c = state.particles[i] - mean;
    cov.noalias() += w[i] * c * c.transpose();
  }
  const double mean_diag = cov.diagonal().mean();
  cov.diagonal().array() += cfg.cov_reg * (mean_diag > 0.0 ? mean_diag : 1.0);

  // Multinomial resampling.
  std::vector<double> cdf(m);
  std::partial_sum(w.begin(), w.end(), cdf.begin());
  RngStream pick(state.seed, StreamId{Phase::kResample, static_cast<std::uint64_t>(state.stage), 0});
  std::vector<std::size_t> ancestors(m);
  for (auto& a : ancestors) {
    const double u = pick.uniform() * cdf.back();
    a = std::min<std::size_t>(static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin()),
                              m - 1);
    while (w[a] == 0.0 && a > 0) --a;
  }

  const int p = cfg.steps_for(d);
  std::optional<GaussianProposal> proposal;
  std::optional<CovarianceMetric> metric;
  SliceConfig slice = cfg.slice;
  slice.steps = p;
  switch (cfg.kernel) {
    case SmcKernel::kRW:
      proposal.emplace(Point::Zero(d), cfg.scale_for(d) * cov);
      break;
    case SmcKernel::kIRMH:
      proposal.emplace(mean, cov);
      break;
    case SmcKernel::kSS:
      metric.emplace(cfg.whiten ? CovarianceMetric::from_covariance(cov, cfg.cov_reg) : CovarianceMetric::identity(d));
      break;
  }

  std::vector<MoveResult> moved(m);
  parallel_for(m, cfg.workers, [&](std::size_t i) {
    const std::size_t a = ancestors[i];
    const SliceState particle{state.particles[a], state.log_priors[a], state.energies[a]};
    RngStream rng(state.seed, StreamId{Phase::kMutate, static_cast<std::uint64_t>(state.stage), i});
    switch (cfg.kernel) {
      case SmcKernel::kRW:
        moved[i] = mutate_rw(particle, beta_next, target, *proposal, p, rng);
        break;
      case SmcKernel::kIRMH:
        moved[i] = mutate_irmh(particle, beta_next, target, *proposal, p, rng);
        break;
      case SmcKernel::kSS:
        moved[i] = mutate_ss(particle, beta_next, target, *metric, slice, rng);
        break;
    }
  });

  std::int64_t accepted = 0;
  for (std::size_t i = 0; i < m; ++i) {
    state.particles[i] = std::move(moved[i].state.x);
    state.energies[i] = moved[i].state.energy;
    state.log_priors[i] = moved[i].state.log_prior;
    state.eval_count += moved[i].evals;
    accepted += moved[i].accepted;
  }
  state.stage_accept.push_back(static_cast<double>(accepted) / (static_cast<double>(m) * std::max(1, p)));
  state.beta = beta_next;
  state.betas.push_back(beta_next);
  ++state.stage;
}

SmcRun run_smc(const TargetModel& target, const SmcConfig& cfg, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  SmcRun run{smc_init(target, cfg, seed), 0.0};
  while (run.state.beta < 1.0) {
    if (run.state.stage >= cfg.max_stages) throw RuntimeError("smc: temperature ladder did not reach 1 in max_stages");
    smc_stage(run.state, cfg, target);
  }
  run.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

}  // namespace nss
