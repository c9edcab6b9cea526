#include "nss/hrss.hpp"

#include <cmath>
#include <string>

#include "nss/numeric.hpp"

namespace nss {

void SliceConfig::validate() const {
  if (!(width > 0.0) || !std::isfinite(width)) throw InvalidArgument("slice width must be positive");
  if (max_stepout < 1 || max_shrink < 1) throw InvalidArgument("slice caps must be >= 1");
  if (steps < 0) throw InvalidArgument("slice steps must be >= 0");
}

SliceState make_slice_state(const Point& x, double e_min, const TargetModel& target) {
  SliceState s{x, target.log_prior(x), kInf};
  if (std::isnan(s.log_prior)) throw RuntimeError("log_prior returned NaN");
  if (s.log_prior == -kInf) throw InvalidArgument("slice start lies outside the prior support");
  s.energy = target.energy(x);
  if (std::isnan(s.energy)) throw RuntimeError("energy returned NaN");
  if (!(s.energy < e_min)) throw InvalidArgument("slice start violates the energy constraint");
  return s;
}

SliceStepReport slice_step(const Point& x, const Point& v, double e_min, const TargetModel& target,
                           const SliceConfig& cfg, RngStream& rng) {
  return slice_step(make_slice_state(x, e_min, target), v, cfg.width, e_min, target, cfg, rng);
}

SliceStepReport slice_step(const SliceState& state, const Point& v, double width, double e_min,
                           const TargetModel& target, const SliceConfig& cfg, RngStream& rng) {
  const double height = state.log_prior + std::log(rng.uniform());
  Point probe(state.x.size());
  double probe_prior = 0.0;
  double probe_energy = 0.0;
  auto in_slice = [&](double t) {
    probe = state.x + t * v;
    probe_prior = target.log_prior(probe);
    if (std::isnan(probe_prior)) throw RuntimeError("log_prior returned NaN");
    if (!(probe_prior >= height)) return false;
    probe_energy = target.energy(probe);
    if (std::isnan(probe_energy)) throw RuntimeError("energy returned NaN");
    return probe_energy < e_min;
  };
  const LineSliceOutcome line = slice_along_line(in_slice, width, cfg.max_stepout, cfg.max_shrink, rng);

  SliceStepReport report;
  report.n_stepout = line.n_stepout;
  report.n_shrink = line.n_shrink;
  report.n_evals = line.n_stepout + line.n_shrink;
  report.n_calls = line.n_calls;
  report.null_move = line.null_move;
  if (line.null_move) {
    report.new_point = state.x;
    report.log_prior = state.log_prior;
    report.energy = state.energy;
  } else {
    report.new_point = probe;
    report.log_prior = probe_prior;
    report.energy = probe_energy;
  }
  return report;
}

double effective_width(const SliceConfig& cfg, const CovarianceMetric& metric, const Point& v) {
  if (cfg.scale == WidthScale::kEuclidean || metric.is_identity()) return cfg.width;
  return cfg.width / metric.norm(v);
}

ReplaceOutcome hrss_replace(const SliceState& parent, double e_min, const TargetModel& target,
                            const CovarianceMetric& metric, const SliceConfig& cfg, RngStream& rng) {
  ReplaceOutcome out;
  out.step_evals.reserve(static_cast<std::size_t>(cfg.steps));
  SliceState current = parent;
  for (int step = 0; step < cfg.steps; ++step) {
    const Point v = draw_direction(metric, rng);
    const SliceStepReport r = slice_step(current, v, effective_width(cfg, metric, v), e_min, target, cfg, rng);
    out.evals += r.n_evals;
    out.calls += r.n_calls;
    out.step_evals.push_back(r.n_evals);
    if (r.null_move) {
      ++out.null_moves;
      continue;
    }
    current.x = r.new_point;
    current.log_prior = r.log_prior;
    current.energy = r.energy;
  }
  out.point = std::move(current.x);
  out.log_prior = current.log_prior;
  out.energy = current.energy;
  return out;
}

ReplaceOutcome hrss_replace(const Point& parent, double e_min, const TargetModel& target,
                            const CovarianceMetric& metric, const SliceConfig& cfg, RngStream& rng) {
  cfg.validate();
  return hrss_replace(make_slice_state(parent, e_min, target), e_min, target, metric, cfg, rng);
}

}  // namespace nss
