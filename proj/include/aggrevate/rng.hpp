#pragma once

#include <cstdint>
#include <random>

#include "aggrevate/mdp.hpp"

namespace aggrevate {

/// Logical consumers of randomness. Every draw in a run comes from a stream
/// keyed by (seed, iteration, lane, sample), so results never depend on how
/// samples are distributed over worker threads.
enum class Lane : std::uint64_t {
  kCollect = 1,
  kLearner = 2,
  kValidation = 3,
  kEnvironment = 4,
  kTest = 5,
};

struct StreamId {
  std::uint64_t iteration = 0;
  Lane lane = Lane::kCollect;
  std::uint64_t sample = 0;
};

/// Deterministic random stream for one (seed, stream id) pair.
class RngStream {
 public:
  RngStream(std::uint64_t seed, StreamId id);

  std::uint64_t seed() const { return seed_; }
  const StreamId& id() const { return id_; }

  std::uint64_t next_u64() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform integer in [0, n).
  int uniform_int(int n);
  /// Index drawn from a probability vector (inverse CDF; zero-probability
  /// entries are never returned).
  int categorical(const Vec& probs);

 private:
  std::uint64_t seed_;
  StreamId id_;
  std::mt19937_64 engine_;
};

}  // namespace aggrevate
