#include "aggrevate/rng.hpp"

#include <stdexcept>

namespace aggrevate {

namespace {

std::mt19937_64 make_engine(std::uint64_t seed, const StreamId& id) {
  const auto lo = [](std::uint64_t x) { return static_cast<std::uint32_t>(x & 0xffffffffu); };
  const auto hi = [](std::uint64_t x) { return static_cast<std::uint32_t>(x >> 32); };
  const auto lane = static_cast<std::uint64_t>(id.lane);
  std::seed_seq seq{lo(seed),         hi(seed),         lo(id.iteration), hi(id.iteration),
                    lo(lane),         hi(lane),         lo(id.sample),    hi(id.sample)};
  return std::mt19937_64(seq);
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, StreamId id)
    : seed_(seed), id_(id), engine_(make_engine(seed, id)) {}

int RngStream::uniform_int(int n) {
  if (n <= 0) throw std::invalid_argument("uniform_int needs a positive bound");
  const auto bound = static_cast<std::uint64_t>(n);
  // Rejection keeps the draw exactly uniform.
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % bound);
  std::uint64_t x = engine_();
  while (x >= limit) x = engine_();
  return static_cast<int>(x % bound);
}

int RngStream::categorical(const Vec& probs) {
  const double u = uniform();
  double acc = 0.0;
  int last_positive = -1;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    if (probs[i] <= 0.0) continue;
    acc += probs[i];
    last_positive = static_cast<int>(i);
    if (u < acc) return last_positive;
  }
  if (last_positive < 0) throw std::invalid_argument("categorical: no positive probability");
  return last_positive;  // rounding left u above the accumulated mass
}

}  // namespace aggrevate
