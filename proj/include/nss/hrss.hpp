#pragma once

#include <cstdint>
#include <vector>

#include "nss/metric.hpp"
#include "nss/rng.hpp"
#include "nss/target.hpp"

namespace nss {

/// How the slice width relates to the sampled direction.
enum class WidthScale {
  /// Width is a Euclidean length along the unit direction.
  kEuclidean,
  /// Width is measured in the metric: the bracket length along v is w / |v|_M.
  kMetric,
};

struct SliceConfig {
  double width = 1.0;
  int max_stepout = 10;  // per side
  int max_shrink = 100;
  int steps = 1;
  WidthScale scale = WidthScale::kMetric;

  void validate() const;
};

/// Accounting for a single stepping-out + shrinkage update along one line.
struct SliceStepReport {
  Point new_point;
  double log_prior = 0.0;
  double energy = 0.0;
  int n_stepout = 0;  // bracket expansions, both sides
  int n_shrink = 0;   // shrinkage proposals, including the accepted one
  int n_evals = 0;    // n_stepout + n_shrink
  int n_calls = 0;    // target evaluations actually performed (adds the two initial endpoint probes)
  bool null_move = false;
};

/// Position on a line through the current point, t = 0 being the start.
struct LineSliceOutcome {
  double t = 0.0;
  int n_stepout = 0;
  int n_shrink = 0;
  int n_calls = 0;
  bool null_move = false;
};

/**
 * Randomly positioned linear stepping-out followed by shrinkage towards t = 0.
 * `in_slice(t)` is the slice membership test and is called exactly n_calls
 * times. On shrinkage exhaustion the outcome is a null move at t = 0.
 */
template <class InSlice>
LineSliceOutcome slice_along_line(InSlice&& in_slice, double width, int max_stepout, int max_shrink,
                                  RngStream& rng) {
  LineSliceOutcome out;
  double lo = -width * rng.uniform();
  double hi = lo + width;

  int left = 0;
  while (left < max_stepout) {
    ++out.n_calls;
    if (!in_slice(lo)) break;
    lo -= width;
    ++left;
  }
  int right = 0;
  while (right < max_stepout) {
    ++out.n_calls;
    if (!in_slice(hi)) break;
    hi += width;
    ++right;
  }
  out.n_stepout = left + right;

  for (int s = 0; s < max_shrink; ++s) {
    const double t = lo + (hi - lo) * rng.uniform();
    ++out.n_calls;
    ++out.n_shrink;
    if (in_slice(t)) {
      out.t = t;
      return out;
    }
    if (t < 0.0) {
      lo = t;
    } else {
      hi = t;
    }
  }
  out.null_move = true;
  return out;
}

/// A point together with its cached prior and energy values.
struct SliceState {
  Point x;
  double log_prior = 0.0;
  double energy = 0.0;
};

/// Evaluates and checks the constrained-slice precondition at x.
SliceState make_slice_state(const Point& x, double e_min, const TargetModel& target);

/**
 * One hit-and-run slice update of Pi(x) 1{E(x) < e_min} along direction v,
 * with the slice height drawn on log Pi. Uses cfg.width as a Euclidean width.
 */
SliceStepReport slice_step(const Point& x, const Point& v, double e_min, const TargetModel& target,
                           const SliceConfig& cfg, RngStream& rng);

/// Same update from a state whose prior and energy are already known.
SliceStepReport slice_step(const SliceState& state, const Point& v, double width, double e_min,
                           const TargetModel& target, const SliceConfig& cfg, RngStream& rng);

struct ReplaceOutcome {
  Point point;
  double log_prior = 0.0;
  double energy = 0.0;
  std::int64_t evals = 0;  // sum of per-step n_evals
  std::int64_t calls = 0;  // sum of per-step n_calls
  int null_moves = 0;
  std::vector<int> step_evals;
};

/// cfg.steps slice updates, each along a fresh direction drawn from `metric`.
ReplaceOutcome hrss_replace(const SliceState& parent, double e_min, const TargetModel& target,
                            const CovarianceMetric& metric, const SliceConfig& cfg, RngStream& rng);

ReplaceOutcome hrss_replace(const Point& parent, double e_min, const TargetModel& target,
                            const CovarianceMetric& metric, const SliceConfig& cfg, RngStream& rng);

/// Width along v implied by cfg.scale.
double effective_width(const SliceConfig& cfg, const CovarianceMetric& metric, const Point& v);

}  // namespace nss
