#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "nss/hrss.hpp"
#include "nss/metric.hpp"
#include "nss/target.hpp"

namespace nss {

enum class SmcKernel { kRW, kIRMH, kSS };

SmcKernel parse_smc_kernel(const std::string& name);
std::string to_string(SmcKernel kernel);

struct SmcConfig {
  int m = 1000;
  double ess_target = 0.9;
  SmcKernel kernel = SmcKernel::kRW;
  /// Mutation steps per particle; 0 selects 5d for RW/IRMH and d for SS.
  int inner_steps = 0;
  /// RW proposal scale on the fitted covariance; 0 selects 2.38^2 / d.
  double rw_scale = 0.0;
  int max_stages = 1000;
  /// Width and caps for the SS kernel.
  SliceConfig slice;
  double cov_reg = 1e-6;
  /// SS directions from the fitted covariance; identity otherwise.
  bool whiten = true;
  int workers = 1;

  int steps_for(int dim) const;
  double scale_for(int dim) const;
  void validate() const;
};

struct SmcState {
  std::vector<Point> particles;
  std::vector<double> energies;
  std::vector<double> log_priors;
  double beta = 0.0;
  double log_z = 0.0;
  int stage = 0;
  std::int64_t eval_count = 0;
  std::uint64_t seed = 0;
  std::vector<double> betas{0.0};
  /// ESS of the incremental weights at each stage.
  std::vector<double> stage_ess;
  /// Mean acceptance (or non-null) fraction of the mutation step at each stage.
  std::vector<double> stage_accept;
};

/// ESS of exp(-dbeta * E_i), computed stably; +inf energies get zero weight.
double incremental_ess(std::span<const double> energies, double dbeta);

/// Next inverse temperature with ESS = rho * m, by bisection on the increment.
double next_temperature(std::span<const double> energies, double beta_t, double rho);

/// log Pi(x) - beta E(x), with -inf wherever the energy is +inf.
double tempered_log_density(double log_prior, double energy, double beta);

/// Multivariate normal with a validated SPD covariance.
class GaussianProposal {
 public:
  GaussianProposal(Point mean, const Matrix& cov);

  int dim() const { return static_cast<int>(mean_.size()); }
  const Point& mean() const { return mean_; }
  /// mean + L z.
  Point sample(RngStream& rng) const;
  /// L z only (for random-walk increments).
  Point sample_offset(RngStream& rng) const;
  double log_density(const Point& x) const;

 private:
  Point mean_;
  Matrix chol_;
  double log_norm_ = 0.0;
};

struct MoveResult {
  SliceState state;
  std::int64_t evals = 0;
  int accepted = 0;  // accepted MH proposals, or non-null slice steps
};

/// p random-walk Metropolis steps with increments drawn from `step` (zero mean).
MoveResult mutate_rw(const SliceState& particle, double beta, const TargetModel& target,
                     const GaussianProposal& step, int p, RngStream& rng);

/// p independence Metropolis-Hastings steps with proposal `fit`.
MoveResult mutate_irmh(const SliceState& particle, double beta, const TargetModel& target,
                       const GaussianProposal& fit, int p, RngStream& rng);

/// cfg.steps hit-and-run slice steps on the tempered density.
MoveResult mutate_ss(const SliceState& particle, double beta, const TargetModel& target,
                     const CovarianceMetric& metric, const SliceConfig& cfg, RngStream& rng);

SmcState smc_init(const TargetModel& target, const SmcConfig& cfg, std::uint64_t seed);

/// Reweight to the next temperature, resample, and mutate.
void smc_stage(SmcState& state, const SmcConfig& cfg, const TargetModel& target);

struct SmcRun {
  SmcState state;
  double wall_time_s = 0.0;
};

SmcRun run_smc(const TargetModel& target, const SmcConfig& cfg, std::uint64_t seed);

}  // namespace nss
