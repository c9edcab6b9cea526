#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nss/hrss.hpp"
#include "nss/nested.hpp"
#include "nss/target.hpp"

namespace nss {

enum class ConstrainedSampler { kGMC, kGMC2019, kRSS, kSS };

ConstrainedSampler parse_sampler(const std::string& name);
std::string to_string(ConstrainedSampler sampler);

struct ReflectConfig {
  double eps = 0.5;
  int l_traj = 8;
  /// Trajectories per replacement; 0 selects 25 d.
  int n_traj = 0;
  double accept_lo = 0.25;
  double accept_hi = 0.5;
  double adapt_factor = 1.25;
  int max_adjust = 50;

  int trajectories_for(int dim) const;
  void validate() const;
};

/// v - 2 (v . n) n with n = grad / |grad|.
Point reflect(const Point& v, const Point& grad);

struct ChainResult {
  SliceState state;
  std::int64_t evals = 0;       // membership probes (one fused prior + energy call each)
  std::int64_t grad_evals = 0;  // energy gradient calls
  std::int64_t steps = 0;
  std::int64_t inside = 0;      // steps whose forward probe was inside the constraint
  /// Per-step probe counts, filled when requested.
  std::vector<int> step_evals;

  double accept_rate() const { return steps > 0 ? static_cast<double>(inside) / steps : 0.0; }
};

/**
 * Galilean Monte Carlo: forward step; if outside, reflect off the normal at
 * the outside point; if the reflected point is also outside, reverse.
 * Outside the prior box the normal is the face normal of the box.
 */
ChainResult gmc_chain(const SliceState& x0, double e_min, const TargetModel& target, const ReflectConfig& cfg,
                      RngStream& rng, bool record_steps = false);

/// 2019 variant: North if the forward probe is inside, otherwise East/West/South from three probes.
ChainResult gmc2019_chain(const SliceState& x0, double e_min, const TargetModel& target, const ReflectConfig& cfg,
                          RngStream& rng, bool record_steps = false);

/**
 * Reflective slice sampling with per-step commitment: a failed reflection
 * ends the current trajectory at the last accepted point.
 */
ChainResult rss_chain(const SliceState& x0, double e_min, const TargetModel& target, const ReflectConfig& cfg,
                      RngStream& rng, bool record_steps = false);

ChainResult run_chain(ConstrainedSampler sampler, const SliceState& x0, double e_min, const TargetModel& target,
                      const ReflectConfig& cfg, RngStream& rng, bool record_steps = false);

/// One application of the acceptance-band rule.
double adjust_eps(double eps, double accept_rate, const ReflectConfig& cfg);

struct EpsTuning {
  double eps = 0.0;
  int adjustments = 0;
  bool converged = false;
};

/// Trial single trajectories, rescaling eps until the acceptance rate is in band or max_adjust is reached.
EpsTuning tune_eps(ConstrainedSampler sampler, const SliceState& x0, double e_min, const TargetModel& target,
                   const ReflectConfig& cfg, RngStream& rng);

/// Replacement kernel for the outer loop; reflective kernels adapt eps once per iteration.
ReplacementKernel constrained_kernel(ConstrainedSampler sampler, const ReflectConfig& cfg, int dim);

struct EvidenceComparison {
  double log_z = 0.0;
  double geo_std = 0.0;
  double oracle_log_z = 0.0;
  std::int64_t evals = 0;
  std::int64_t iterations = 0;
};

/// Single-death nested sampling on the alpha likelihood with the chosen constrained sampler.
EvidenceComparison compare_evidence(ConstrainedSampler sampler, double alpha, int d, const ReflectConfig& cfg,
                                    std::uint64_t seed, int m = 1000, int workers = 1);

}  // namespace nss
