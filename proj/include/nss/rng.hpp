#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace nss {

/// Sampler phases that own disjoint families of random streams.
enum class Phase : std::uint64_t {
  kInit = 1,
  kResample = 2,
  kMutate = 3,
  kVolumes = 4,
  kPosterior = 5,
  kTune = 6,
  kValidate = 7,
  kProjection = 8,
  kUser = 100,
};

/// Identifies one random stream below a master seed.
struct StreamId {
  Phase phase = Phase::kUser;
  std::uint64_t iteration = 0;
  std::uint64_t index = 0;
};

/**
 * \brief Keyed random stream.
 *
 * The generator state is derived by hashing (seed, phase, iteration, index),
 * so a stream depends only on its key and never on the order in which other
 * streams were created or consumed. The core generator is xoshiro256**
 * seeded through splitmix64. A stream is owned by one worker at a time; to
 * get independent randomness for parallel work, create one stream per id.
 *
 * Satisfies UniformRandomBitGenerator so it can drive <random> distributions.
 */
class RngStream {
 public:
  using result_type = std::uint64_t;

  RngStream(std::uint64_t seed, StreamId id);
  explicit RngStream(std::uint64_t seed) : RngStream(seed, StreamId{}) {}

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  /// Uniform on the open interval (0, 1); never returns 0 or 1.
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal() { return normal_(*this); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);

  std::uint64_t seed() const { return seed_; }
  const StreamId& id() const { return id_; }

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::uint64_t s_[4];
  std::normal_distribution<double> normal_{0.0, 1.0};
};

/// splitmix64 finalizer; exposed for hashing stream keys.
std::uint64_t mix64(std::uint64_t x);

}  // namespace nss
