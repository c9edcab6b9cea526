#pragma once

#include <cstdint>
#include <span>

#include "nss/target.hpp"

namespace nss {

inline constexpr std::uint64_t kProjectionSeed = 0x5113ced;

/// Median pairwise Euclidean distance over the pooled set, zero distances excluded.
double median_bandwidth(std::span<const Point> x, std::span<const Point> y);

/**
 * RBF-kernel maximum mean discrepancy with the median-heuristic bandwidth.
 * Within-set terms are U-statistics, the cross term is a V-statistic, and
 * MMD^2 is clamped at 0 before the square root.
 */
double mmd(std::span<const Point> x, std::span<const Point> y);
/// Same estimator with an explicit bandwidth sigma.
double mmd(std::span<const Point> x, std::span<const Point> y, double sigma);

/// Sliced 2-Wasserstein distance over n_proj uniform directions drawn from `seed`.
double sliced_w2(std::span<const Point> x, std::span<const Point> y, int n_proj = 200,
                 std::uint64_t seed = kProjectionSeed);

/// (sum w)^2 / sum w^2.
double kish_ess(std::span<const double> weights);

}  // namespace nss
