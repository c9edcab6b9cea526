#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "nss/hrss.hpp"
#include "nss/metric.hpp"
#include "nss/target.hpp"

namespace nss {

struct NsConfig {
  int m = 1000;
  int k = 100;
  SliceConfig inner;
  double term_threshold = 3.0;
  double metric_reg = 1e-6;
  int shrink_sims = 100;
  double beta = 1.0;
  /// Estimate the direction metric from the live set; identity otherwise.
  bool whiten = true;
  /// Append the final live set to the dead list at termination.
  bool flush_live = true;
  /// Prior draws allowed in ns_init, as a multiple of m.
  int init_budget_factor = 100;
  std::int64_t max_iterations = 1000000;
  int workers = 1;

  void validate() const;
};

struct DeadRecord {
  double energy = 0.0;
  int n_live = 0;
  double birth_energy = 0.0;
  Point x;
};

struct NsState {
  std::vector<Point> live;
  std::vector<double> live_energy;
  std::vector<double> live_log_prior;
  std::vector<double> live_birth;
  std::vector<DeadRecord> dead;
  CovarianceMetric metric = CovarianceMetric::identity(1);
  std::int64_t iteration = 0;
  std::int64_t eval_count = 0;
  std::int64_t init_attempts = 0;
  std::int64_t null_moves = 0;
  std::uint64_t seed = 0;
  /// Running sum of -1/n_live over the dead list.
  double log_x_hat = 0.0;
  /// Rectangle-rule log evidence at cfg.beta with deterministic volumes.
  double log_z_det = -std::numeric_limits<double>::infinity();
};

/// Output of one constrained replacement.
struct Replacement {
  Point x;
  double log_prior = 0.0;
  double energy = 0.0;
  std::int64_t calls = 0;
  int null_moves = 0;
  /// Fraction of in-bound proposals, for step-size adaptation (NaN if unused).
  double accept_rate = std::numeric_limits<double>::quiet_NaN();
};

/**
 * \brief Constrained replacement kernel used by the outer loop.
 *
 * `replace` draws a new point from the prior restricted to E < e_min starting
 * at `parent`, and is called concurrently. `after_batch`, if set, runs on the
 * orchestrating thread after each batch and may adapt kernel parameters.
 */
struct ReplacementKernel {
  std::function<Replacement(const SliceState& parent, double e_min, const CovarianceMetric& metric,
                            const TargetModel& target, RngStream& rng)>
      replace;
  std::function<void(std::span<const Replacement>)> after_batch;
};

ReplacementKernel hrss_kernel(const SliceConfig& cfg);

/// Fills the live set by prior rejection until energies are finite.
NsState ns_init(const TargetModel& target, const NsConfig& cfg, std::uint64_t seed);

/// One batched iteration: delete the k worst, resample parents, mutate, re-estimate the metric.
void ns_step(NsState& state, const NsConfig& cfg, const TargetModel& target, const ReplacementKernel& kernel);

bool should_terminate(const NsState& state, const NsConfig& cfg);

/// Moves the remaining live points onto the dead list with n_live = m, ..., 1.
void flush_live(NsState& state, const NsConfig& cfg);

/// R trajectories of log X_i (one row per replicate) with log t_i = log(s) / n_live.
std::vector<std::vector<double>> simulate_volumes(std::span<const DeadRecord> dead, int replicates,
                                                  std::uint64_t seed);

struct EvidenceEstimate {
  std::vector<double> log_z_samples;
  double log_z_mean = 0.0;
  double log_z_std = 0.0;
  /// Normalized geometric-mean posterior weights, one per dead record.
  std::vector<double> weights;
  double ess = 0.0;
};

/// Trapezoid evidence over simulated volumes at inverse temperature beta.
EvidenceEstimate evidence(std::span<const DeadRecord> dead, double beta, int replicates, std::uint64_t seed);

/// n multinomial draws of points proportional to weights.
std::vector<Point> posterior_resample(std::span<const Point> points, std::span<const double> weights, int n,
                                      std::uint64_t seed);
std::vector<Point> posterior_resample(std::span<const DeadRecord> dead, std::span<const double> weights, int n,
                                      std::uint64_t seed);

struct NsRun {
  NsState state;
  EvidenceEstimate evidence;
  double wall_time_s = 0.0;
};

/// ns_init, ns_step until should_terminate, optional flush, then evidence.
NsRun run_nested(const TargetModel& target, const NsConfig& cfg, std::uint64_t seed, const ReplacementKernel& kernel);
NsRun run_nested(const TargetModel& target, const NsConfig& cfg, std::uint64_t seed);

}  // namespace nss
