#include "nss/reflective.hpp"

#include <cmath>
#include <memory>

#include "nss/numeric.hpp"
#include "nss/targets.hpp"

namespace nss {

ConstrainedSampler parse_sampler(const std::string& name) {
  if (name == "GMC" || name == "gmc") return ConstrainedSampler::kGMC;
  if (name == "GMC2019" || name == "gmc2019") return ConstrainedSampler::kGMC2019;
  if (name == "RSS" || name == "rss") return ConstrainedSampler::kRSS;
  if (name == "SS" || name == "ss") return ConstrainedSampler::kSS;
  throw InvalidArgument("unknown constrained sampler: " + name);
}

std::string to_string(ConstrainedSampler sampler) {
  switch (sampler) {
    case ConstrainedSampler::kGMC: return "GMC";
    case ConstrainedSampler::kGMC2019: return "GMC2019";
    case ConstrainedSampler::kRSS: return "RSS";
    case ConstrainedSampler::kSS: return "SS";
  }
  return "?";
}

int ReflectConfig::trajectories_for(int dim) const { return n_traj > 0 ? n_traj : 25 * dim; }

void ReflectConfig::validate() const {
  if (!(eps > 0.0) || !std::isfinite(eps)) throw InvalidArgument("reflect: eps must be positive");
  if (l_traj < 1) throw InvalidArgument("reflect: l_traj must be >= 1");
  if (n_traj < 0) throw InvalidArgument("reflect: n_traj must be >= 0");
  if (!(accept_lo >= 0.0 && accept_lo < accept_hi && accept_hi <= 1.0)) {
    throw InvalidArgument("reflect: need 0 <= accept_lo < accept_hi <= 1");
  }
  if (!(adapt_factor > 1.0)) throw InvalidArgument("reflect: adapt_factor must exceed 1");
  if (max_adjust < 0) throw InvalidArgument("reflect: max_adjust must be >= 0");
}

Point reflect(const Point& v, const Point& grad) {
  if (v.size() != grad.size()) throw InvalidArgument("reflect: dimension mismatch");
  const double norm = grad.norm();
  if (!(norm > 0.0) || !std::isfinite(norm)) throw InvalidArgument("reflect: zero or non-finite normal");
  const Point n = grad / norm;
  return v - 2.0 * v.dot(n) * n;
}

namespace {

/// Shared bookkeeping for the three reflective chains.
class Walker {
 public:
  Walker(const SliceState& x0, double e_min, const TargetModel& target, bool record)
      : e_min_(e_min), target_(target), record_(record) {
    if (!target.has_gradient()) throw InvalidArgument("reflective samplers need an energy gradient");
    if (x0.x.size() != target.dim) throw InvalidArgument("reflect: start point has wrong dimension");
    if (!(x0.energy < e_min) || x0.log_prior == -kInf) {
      throw InvalidArgument("reflect: start point violates the constraint");
    }
    out_.state = x0;
  }

  /// Membership probe; caches the values of the last probed point.
  bool probe(const Point& x) {
    ++out_.evals;
    ++step_count_;
    last_log_prior_ = target_.log_prior(x);
    if (last_log_prior_ == -kInf) {
      last_energy_ = kInf;
      return false;
    }
    last_energy_ = target_.energy(x);
    if (std::isnan(last_energy_) || std::isnan(last_log_prior_)) throw RuntimeError("reflect: NaN density");
    return last_energy_ < e_min_;
  }

  /// Boundary normal at a point: a box face normal outside the prior, otherwise grad E.
  Point normal(const Point& x) {
    if (target_.prior_box && !target_.prior_box->contains(x)) {
      const Box& box = *target_.prior_box;
      Point n = Point::Zero(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (x[i] > box.hi[i]) n[i] = 1.0;
        if (x[i] < box.lo[i]) n[i] = -1.0;
      }
      return n;
    }
    ++out_.grad_evals;
    return target_.energy_grad(x);
  }

  void accept(const Point& x) {
    out_.state.x = x;
    out_.state.log_prior = last_log_prior_;
    out_.state.energy = last_energy_;
  }

  void end_step(bool forward_inside) {
    ++out_.steps;
    if (forward_inside) ++out_.inside;
    if (record_) out_.step_evals.push_back(step_count_);
    step_count_ = 0;
  }

  const Point& x() const { return out_.state.x; }
  ChainResult take() { return std::move(out_); }

 private:
  double e_min_;
  const TargetModel& target_;
  bool record_;
  ChainResult out_;
  double last_log_prior_ = 0.0;
  double last_energy_ = 0.0;
  int step_count_ = 0;
};

Point draw_velocity(int d, RngStream& rng) {
  Point v(d);
  for (int i = 0; i < d; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

ChainResult gmc_chain(const SliceState& x0, double e_min, const TargetModel& target, const ReflectConfig& cfg,
                      RngStream& rng, bool record_steps) {
  cfg.validate();
  Walker w(x0, e_min, target, record_steps);
  const int n_traj = cfg.trajectories_for(target.dim);
  for (int t = 0; t < n_traj; ++t) {
    Point v = draw_velocity(target.dim, rng);
    for (int s = 0; s < cfg.l_traj; ++s) {
      const Point x1 = w.x() + cfg.eps * v;
      if (w.probe(x1)) {
        w.accept(x1);
        w.end_step(true);
        continue;
      }
      const Point v_ref = reflect(v, w.normal(x1));
      const Point x2 = x1 + cfg.eps * v_ref;
      if (w.probe(x2)) {
        w.accept(x2);
        v = v_ref;
      } else {
        v = -v;
      }
      w.end_step(false);
    }
  }
  return w.take();
}

ChainResult gmc2019_chain(const SliceState& x0, double e_min, const TargetModel& target, const ReflectConfig& cfg,
                          RngStream& rng, bool record_steps) {
  cfg.validate();
  Walker w(x0, e_min, target, record_steps);
  const int n_traj = cfg.trajectories_for(target.dim);
  for (int t = 0; t < n_traj; ++t) {
    Point v = draw_velocity(target.dim, rng);
    for (int s = 0; s < cfg.l_traj; ++s) {
      const Point north = w.x() + cfg.eps * v;
      if (w.probe(north)) {
        w.accept(north);
        w.end_step(true);
        continue;
      }
      const Point v_ref = reflect(v, w.normal(w.x()));
      const bool east = w.probe(w.x() + cfg.eps * v_ref);
      const bool west = w.probe(w.x() - cfg.eps * v_ref);
      const bool south = w.probe(w.x() - cfg.eps * v);
      if (south && east && !west) {
        v = v_ref;
      } else if (south && west && !east) {
        v = -v_ref;
      } else {
        v = -v;
      }
      w.end_step(false);
    }
  }
  return w.take();
}

ChainResult rss_chain(const SliceState& x0, double e_min, const TargetModel& target, const ReflectConfig& cfg,
                      RngStream& rng, bool record_steps) {
  cfg.validate();
  Walker w(x0, e_min, target, record_steps);
  const int n_traj = cfg.trajectories_for(target.dim);
  for (int t = 0; t < n_traj; ++t) {
    Point v = draw_velocity(target.dim, rng);
    bool alive = true;
    for (int s = 0; s < cfg.l_traj && alive; ++s) {
      Point x1 = w.x() + cfg.eps * v;
      const bool forward = w.probe(x1);
      if (!forward) {
        const Point v_ref = reflect(v, w.normal(x1));
        const Point x2 = x1 + cfg.eps * v_ref;
        if (w.probe(x2)) {
          x1 = x2;
          v = v_ref;
        } else {
          alive = false;
        }
      }
      if (alive) w.accept(x1);
      w.end_step(forward);
    }
  }
  return w.take();
}

ChainResult run_chain(ConstrainedSampler sampler, const SliceState& x0, double e_min, const TargetModel& target,
                      const ReflectConfig& cfg, RngStream& rng, bool record_steps) {
  switch (sampler) {
    case ConstrainedSampler::kGMC: return gmc_chain(x0, e_min, target, cfg, rng, record_steps);
    case ConstrainedSampler::kGMC2019: return gmc2019_chain(x0, e_min, target, cfg, rng, record_steps);
    case ConstrainedSampler::kRSS: return rss_chain(x0, e_min, target, cfg, rng, record_steps);
    case ConstrainedSampler::kSS: break;
  }
  throw InvalidArgument("run_chain: SS is not a reflective sampler");
}

double adjust_eps(double eps, double accept_rate, const ReflectConfig& cfg) {
  if (accept_rate < cfg.accept_lo) return eps / cfg.adapt_factor;
  if (accept_rate > cfg.accept_hi) return eps * cfg.adapt_factor;
  return eps;
}

EpsTuning tune_eps(ConstrainedSampler sampler, const SliceState& x0, double e_min, const TargetModel& target,
                   const ReflectConfig& cfg, RngStream& rng) {
  cfg.validate();
  ReflectConfig trial = cfg;
  trial.n_traj = 1;
  EpsTuning out;
  out.eps = cfg.eps;
  SliceState x = x0;
  for (;;) {
    trial.eps = out.eps;
    ChainResult r = run_chain(sampler, x, e_min, target, trial, rng);
    const double rate = r.accept_rate();
    if (rate >= cfg.accept_lo && rate <= cfg.accept_hi) {
      out.converged = true;
      return out;
    }
    if (out.adjustments >= cfg.max_adjust) return out;
    out.eps = adjust_eps(out.eps, rate, cfg);
    ++out.adjustments;
    x = std::move(r.state);
  }
}

ReplacementKernel constrained_kernel(ConstrainedSampler sampler, const ReflectConfig& cfg, int dim) {
  cfg.validate();
  if (sampler == ConstrainedSampler::kSS) {
    SliceConfig slice;
    slice.steps = cfg.trajectories_for(dim);
    return hrss_kernel(slice);
  }
  auto eps = std::make_shared<double>(cfg.eps);
  ReplacementKernel kernel;
  kernel.replace = [sampler, cfg, eps](const SliceState& parent, double e_min, const CovarianceMetric&,
                                       const TargetModel& target, RngStream& rng) {
    ReflectConfig run = cfg;
    run.eps = *eps;
    ChainResult r = run_chain(sampler, parent, e_min, target, run, rng);
    Replacement out;
    out.x = std::move(r.state.x);
    out.log_prior = r.state.log_prior;
    out.energy = r.state.energy;
    out.calls = r.evals;
    out.accept_rate = r.accept_rate();
    return out;
  };
  kernel.after_batch = [cfg, eps](std::span<const Replacement> batch) {
    double sum = 0.0;
    int n = 0;
    for (const Replacement& r : batch) {
      if (std::isnan(r.accept_rate)) continue;
      sum += r.accept_rate;
      ++n;
    }
    if (n > 0) *eps = adjust_eps(*eps, sum / n, cfg);
  };
  return kernel;
}

EvidenceComparison compare_evidence(ConstrainedSampler sampler, double alpha, int d, const ReflectConfig& cfg,
                                    std::uint64_t seed, int m, int workers) {
  AlphaLikelihoodSpec spec;
  spec.alpha = alpha;
  spec.d = d;
  const TargetModel target = alpha_target(spec);

  NsConfig ns;
  ns.m = m;
  ns.k = 1;
  ns.workers = workers;
  ns.whiten = sampler == ConstrainedSampler::kSS;
  NsRun run = run_nested(target, ns, seed, constrained_kernel(sampler, cfg, d));

  EvidenceComparison out;
  out.log_z = run.evidence.log_z_mean;
  out.geo_std = run.evidence.log_z_std;
  out.oracle_log_z = *target.exact_log_z;
  out.evals = run.state.eval_count;
  out.iterations = run.state.iteration;
  return out;
}

}  // namespace nss
