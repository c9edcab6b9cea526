#include "nss/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "nss/metric.hpp"

namespace nss {

namespace {

void check_cloud(std::span<const Point> x, std::span<const Point> y, std::size_t min_size) {
  if (x.size() < min_size || y.size() < min_size) {
    throw InvalidArgument("sample sets need at least " + std::to_string(min_size) + " points");
  }
  const auto d = x.front().size();
  auto same_dim = [d](const Point& p) { return p.size() == d; };
  if (d == 0 || !std::all_of(x.begin(), x.end(), same_dim) || !std::all_of(y.begin(), y.end(), same_dim)) {
    throw InvalidArgument("sample sets must share a positive dimension");
  }
}

// Mean of k(a_i, b_j) over i, j, skipping i == j when `u_stat`.
double kernel_mean(std::span<const Point> a, std::span<const Point> b, double inv_two_sigma_sq, bool u_stat) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < b.size(); ++j) {
      if (u_stat && i == j) continue;
      acc += std::exp(-(a[i] - b[j]).squaredNorm() * inv_two_sigma_sq);
    }
  }
  const double pairs = u_stat ? static_cast<double>(a.size()) * static_cast<double>(a.size() - 1)
                              : static_cast<double>(a.size()) * static_cast<double>(b.size());
  return acc / pairs;
}

}  // namespace

double median_bandwidth(std::span<const Point> x, std::span<const Point> y) {
  std::vector<const Point*> pooled;
  pooled.reserve(x.size() + y.size());
  for (const auto& p : x) pooled.push_back(&p);
  for (const auto& p : y) pooled.push_back(&p);
  std::vector<double> dists;
  dists.reserve(pooled.size() * (pooled.size() - 1) / 2);
  for (std::size_t i = 0; i < pooled.size(); ++i) {
    for (std::size_t j = i + 1; j < pooled.size(); ++j) {
      const double dist = (*pooled[i] - *pooled[j]).norm();
      if (dist > 0.0) dists.push_back(dist);
    }
  }
  if (dists.empty()) throw InvalidArgument("degenerate bandwidth: all pooled distances are zero");
  // Lower median for even counts keeps the value an actual pairwise distance.
  const auto mid = dists.begin() + static_cast<std::ptrdiff_t>((dists.size() - 1) / 2);
  std::nth_element(dists.begin(), mid, dists.end());
  return *mid;
}

double mmd(std::span<const Point> x, std::span<const Point> y) {
  check_cloud(x, y, 2);
  return mmd(x, y, median_bandwidth(x, y));
}

double mmd(std::span<const Point> x, std::span<const Point> y, double sigma) {
  check_cloud(x, y, 2);
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw InvalidArgument("mmd: bandwidth must be positive");
  const double c = 1.0 / (2.0 * sigma * sigma);
  const double mmd2 = kernel_mean(x, x, c, true) - 2.0 * kernel_mean(x, y, c, false) + kernel_mean(y, y, c, true);
  return std::sqrt(std::max(0.0, mmd2));
}

double sliced_w2(std::span<const Point> x, std::span<const Point> y, int n_proj, std::uint64_t seed) {
  check_cloud(x, y, 1);
  if (x.size() != y.size()) throw InvalidArgument("sliced_w2: sample counts must be equal");
  if (n_proj < 1) throw InvalidArgument("sliced_w2: need at least one projection");
  const int d = static_cast<int>(x.front().size());
  const auto metric = CovarianceMetric::identity(d);
  std::vector<double> px(x.size());
  std::vector<double> py(y.size());
  double total = 0.0;
  for (int k = 0; k < n_proj; ++k) {
    RngStream rng(seed, StreamId{Phase::kProjection, 0, static_cast<std::uint64_t>(k)});
    const Point theta = draw_direction(metric, rng);
    for (std::size_t i = 0; i < x.size(); ++i) {
      px[i] = theta.dot(x[i]);
      py[i] = theta.dot(y[i]);
    }
    std::sort(px.begin(), px.end());
    std::sort(py.begin(), py.end());
    double acc = 0.0;
    for (std::size_t i = 0; i < px.size(); ++i) acc += (px[i] - py[i]) * (px[i] - py[i]);
    total += acc / static_cast<double>(px.size());
  }
  return std::sqrt(total / n_proj);
}

double kish_ess(std::span<const double> weights) {
  double sum = 0.0;
  double sum_sq = 0.0;
  double scale = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidArgument("kish_ess: weights must be finite and >= 0");
    scale = std::max(scale, w);
  }
  if (scale == 0.0) throw InvalidArgument("kish_ess: all weights are zero");
  for (double w : weights) {
    const double v = w / scale;
    sum += v;
    sum_sq += v * v;
  }
  return sum * sum / sum_sq;
}

}  // namespace nss
