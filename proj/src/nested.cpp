#include "nss/nested.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "nss/metrics.hpp"
#include "nss/numeric.hpp"
#include "nss/parallel.hpp"

namespace nss {

namespace {

constexpr double kLog2 = 0.69314718055994530942;

CovarianceMetric live_metric(const NsState& state, const NsConfig& cfg, int dim) {
  if (!cfg.whiten) return CovarianceMetric::identity(dim);
  return estimate_metric(state.live, cfg.metric_reg);
}

// Appends a record and advances the deterministic volume and quadrature.
void push_dead(NsState& state, const NsConfig& cfg, DeadRecord rec) {
  const double log_x_prev = state.log_x_hat;
  const double step = 1.0 / rec.n_live;
  state.log_x_hat -= step;
  state.log_z_det = log_add(state.log_z_det, log_x_prev + std::log(-std::expm1(-step)) - cfg.beta * rec.energy);
  state.dead.push_back(std::move(rec));
}

// Live indices ordered by energy, highest first; ties keep index order.
std::vector<std::size_t> worst_first(const std::vector<double>& energy) {
  std::vector<std::size_t> order(energy.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return energy[a] > energy[b]; });
  return order;
}

}  // namespace

void NsConfig::validate() const {
  if (m < 2) throw InvalidArgument("ns: m must be >= 2");
  if (k < 1 || k >= m) throw InvalidArgument("ns: k must satisfy 1 <= k < m");
  if (!(term_threshold > 0.0)) throw InvalidArgument("ns: term_threshold must be positive");
  if (!(metric_reg >= 0.0)) throw InvalidArgument("ns: metric_reg must be >= 0");
  if (shrink_sims < 2) throw InvalidArgument("ns: shrink_sims must be >= 2");
  if (!(beta >= 0.0 && beta <= 1.0)) throw InvalidArgument("ns: beta must lie in [0, 1]");
  if (init_budget_factor < 1) throw InvalidArgument("ns: init_budget_factor must be >= 1");
  if (max_iterations < 1) throw InvalidArgument("ns: max_iterations must be >= 1");
  if (workers < 1) throw InvalidArgument("ns: workers must be >= 1");
  inner.validate();
}

ReplacementKernel hrss_kernel(const SliceConfig& cfg) {
  cfg.validate();
  ReplacementKernel kernel;
  kernel.replace = [cfg](const SliceState& parent, double e_min, const CovarianceMetric& metric,
                         const TargetModel& target, RngStream& rng) {
    ReplaceOutcome out = hrss_replace(parent, e_min, target, metric, cfg, rng);
    Replacement r;
    r.x = std::move(out.point);
    r.log_prior = out.log_prior;
    r.energy = out.energy;
    r.calls = out.calls;
    r.null_moves = out.null_moves;
    return r;
  };
  return kernel;
}

NsState ns_init(const TargetModel& target, const NsConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  if (target.dim < 1 || !target.log_prior || !target.energy || !target.prior_sample) {
    throw InvalidArgument("ns: incomplete target model");
  }
  NsState state;
  state.seed = seed;
  const auto m = static_cast<std::size_t>(cfg.m);
  state.live.reserve(m);
  state.live_energy.reserve(m);
  state.live_log_prior.reserve(m);
  state.live_birth.assign(m, kInf);
  const std::int64_t budget = static_cast<std::int64_t>(cfg.init_budget_factor) * cfg.m;
  for (std::size_t i = 0; i < m; ++i) {
    RngStream rng(seed, StreamId{Phase::kInit, 0, i});
    for (;;) {
      if (state.init_attempts >= budget) throw RuntimeError("prior support mismatch: init rejection budget exhausted");
      ++state.init_attempts;
      Point x = target.prior_sample(rng);
      const double lp = target.log_prior(x);
      if (std::isnan(lp)) throw RuntimeError("log_prior returned NaN");
      if (lp == -kInf) continue;
      const double e = target.energy(x);
      ++state.eval_count;
      if (std::isnan(e)) throw RuntimeError("energy returned NaN");
      if (e == kInf) continue;
      state.live.push_back(std::move(x));
      state.live_energy.push_back(e);
      state.live_log_prior.push_back(lp);
      break;
    }
  }
  state.metric = live_metric(state, cfg, target.dim);
  return state;
}

void ns_step(NsState& state, const NsConfig& cfg, const TargetModel& target, const ReplacementKernel& kernel) {
  const auto m = static_cast<std::size_t>(cfg.m);
  const auto k = static_cast<std::size_t>(cfg.k);
  if (state.live.size() != m) throw InvalidArgument("ns_step: live set size does not match cfg.m");

  const std::vector<std::size_t> order = worst_first(state.live_energy);
  const double e_batch = state.live_energy[order[k - 1]];
  std::vector<std::size_t> slots(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(k));
  std::vector<std::size_t> survivors(order.begin() + static_cast<std::ptrdiff_t>(k), order.end());

  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t i = slots[j];
    push_dead(state, cfg,
              DeadRecord{state.live_energy[i], static_cast<int>(m - j), state.live_birth[i], state.live[i]});
  }

  RngStream pick(state.seed, StreamId{Phase::kResample, static_cast<std::uint64_t>(state.iteration), 0});
  std::vector<std::size_t> parents(k);
  for (auto& p : parents) p = survivors[pick.below(survivors.size())];

  std::vector<Replacement> results(k);
  parallel_for(k, cfg.workers, [&](std::size_t j) {
    const std::size_t p = parents[j];
    const SliceState parent{state.live[p], state.live_log_prior[p], state.live_energy[p]};
    // A survivor tied with the threshold sits on the boundary; admit its own level.
    const double e_min = parent.energy < e_batch ? e_batch : std::nextafter(e_batch, kInf);
    RngStream rng(state.seed, StreamId{Phase::kMutate, static_cast<std::uint64_t>(state.iteration), j});
    results[j] = kernel.replace(parent, e_min, state.metric, target, rng);
  });

  for (std::size_t j = 0; j < k; ++j) {
    const std::size_t i = slots[j];
    state.live[i] = results[j].x;
    state.live_energy[i] = results[j].energy;
    state.live_log_prior[i] = results[j].log_prior;
    state.live_birth[i] = e_batch;
    state.eval_count += results[j].calls;
    state.null_moves += results[j].null_moves;
  }
  if (kernel.after_batch) kernel.after_batch(results);
  state.metric = live_metric(state, cfg, target.dim);
  ++state.iteration;
}

bool should_terminate(const NsState& state, const NsConfig& cfg) {
  if (state.dead.empty()) return false;
  const double e_best = *std::min_element(state.live_energy.begin(), state.live_energy.end());
  const double log_z_live = -cfg.beta * e_best + state.log_x_hat;
  return log_z_live - log_add(state.log_z_det, log_z_live) < -cfg.term_threshold;
}

void flush_live(NsState& state, const NsConfig& cfg) {
  const std::vector<std::size_t> order = worst_first(state.live_energy);
  const auto n = static_cast<int>(order.size());
  for (int j = 0; j < n; ++j) {
    const std::size_t i = order[static_cast<std::size_t>(j)];
    push_dead(state, cfg, DeadRecord{state.live_energy[i], n - j, state.live_birth[i], state.live[i]});
  }
  state.live.clear();
  state.live_energy.clear();
  state.live_log_prior.clear();
  state.live_birth.clear();
}

std::vector<std::vector<double>> simulate_volumes(std::span<const DeadRecord> dead, int replicates,
                                                  std::uint64_t seed) {
  if (replicates < 1) throw InvalidArgument("simulate_volumes: need at least one replicate");
  std::vector<std::vector<double>> out(static_cast<std::size_t>(replicates));
  for (std::size_t r = 0; r < out.size(); ++r) {
    RngStream rng(seed, StreamId{Phase::kVolumes, r, 0});
    auto& row = out[r];
    row.resize(dead.size());
    double log_x = 0.0;
    for (std::size_t i = 0; i < dead.size(); ++i) {
      log_x += std::log(rng.uniform()) / dead[i].n_live;
      row[i] = log_x;
    }
  }
  return out;
}

EvidenceEstimate evidence(std::span<const DeadRecord> dead, double beta, int replicates, std::uint64_t seed) {
  if (dead.empty()) throw InvalidArgument("evidence: empty dead list");
  if (replicates < 1) throw InvalidArgument("evidence: need at least one replicate");
  const std::size_t n = dead.size();
  EvidenceEstimate est;
  est.log_z_samples.reserve(static_cast<std::size_t>(replicates));
  std::vector<double> mean_log_w(n, 0.0);
  std::vector<double> log_w(n);
  const auto volumes = simulate_volumes(dead, replicates, seed);
  for (const auto& log_x : volumes) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prev = i == 0 ? 0.0 : log_x[i - 1];
      // log((X_{i-1} - X_{i+1}) / 2), with X_{N+1} = 0.
      const double log_dx = i + 1 < n ? prev + std::log(-std::expm1(log_x[i + 1] - prev)) - kLog2 : prev - kLog2;
      log_w[i] = -beta * dead[i].energy + log_dx;
      mean_log_w[i] += log_w[i] / replicates;
    }
    est.log_z_samples.push_back(logsumexp(log_w));
  }
  const MeanStd ms = mean_std(est.log_z_samples);
  est.log_z_mean = ms.mean;
  est.log_z_std = ms.std;
  const double norm = logsumexp(mean_log_w);
  est.weights.resize(n);
  for (std::size_t i = 0; i < n; ++i) est.weights[i] = std::exp(mean_log_w[i] - norm);
  est.ess = kish_ess(est.weights);
  return est;
}

std::vector<Point> posterior_resample(std::span<const Point> points, std::span<const double> weights, int n,
                                      std::uint64_t seed) {
  if (points.size() != weights.size()) throw InvalidArgument("posterior_resample: size mismatch");
  if (n < 1) throw InvalidArgument("posterior_resample: n must be >= 1");
  std::vector<double> cdf(weights.size());
  double total = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (!(weights[i] >= 0.0) || !std::isfinite(weights[i])) {
      throw InvalidArgument("posterior_resample: weights must be finite and >= 0");
    }
    total += weights[i];
    cdf[i] = total;
  }
  if (!(total > 0.0)) throw InvalidArgument("posterior_resample: all weights are zero");
  RngStream rng(seed, StreamId{Phase::kPosterior, 0, 0});
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < n; ++s) {
    const double u = rng.uniform() * total;
    auto idx = static_cast<std::size_t>(std::upper_bound(cdf.begin(), cdf.end(), u) - cdf.begin());
    if (idx == cdf.size()) {
      idx = cdf.size() - 1;
      while (weights[idx] == 0.0) --idx;
    }
    out.push_back(points[idx]);
  }
  return out;
}

std::vector<Point> posterior_resample(std::span<const DeadRecord> dead, std::span<const double> weights, int n,
                                      std::uint64_t seed) {
  std::vector<Point> points;
  points.reserve(dead.size());
  for (const auto& rec : dead) points.push_back(rec.x);
  return posterior_resample(points, weights, n, seed);
}

NsRun run_nested(const TargetModel& target, const NsConfig& cfg, std::uint64_t seed, const ReplacementKernel& kernel) {
  const auto start = std::chrono::steady_clock::now();
  NsRun run{ns_init(target, cfg, seed), {}, 0.0};
  while (run.state.iteration < cfg.max_iterations && !should_terminate(run.state, cfg)) {
    ns_step(run.state, cfg, target, kernel);
  }
  if (cfg.flush_live) flush_live(run.state, cfg);
  run.evidence = evidence(run.state.dead, cfg.beta, cfg.shrink_sims, seed);
  run.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return run;
}

NsRun run_nested(const TargetModel& target, const NsConfig& cfg, std::uint64_t seed) {
  return run_nested(target, cfg, seed, hrss_kernel(cfg.inner));
}

}  // namespace nss
