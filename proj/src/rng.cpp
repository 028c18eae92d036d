#include "mbfusion/rng.hpp"

#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>

#include "mbfusion/errors.hpp"

namespace mbfusion {

namespace {

// splitmix64; standard seed-mixing step.
std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

RandomEngine RandomEngine::stream(std::uint64_t master, std::uint64_t stream_id) {
  return RandomEngine(mix64(mix64(master) ^ mix64(stream_id * 0x9e3779b97f4a7c15ULL + 1)));
}

std::int64_t RandomEngine::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ParamError("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % span;
  std::uint64_t r;
  do {
    r = next_u64();
  } while (r >= limit);
  return lo + static_cast<std::int64_t>(r % span);
}

double RandomEngine::normal() {
  const double u1 = uniform01_open_low();
  const double u2 = uniform01();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double RandomEngine::gamma(double shape) {
  if (!(shape > 0.0)) throw ParamError("gamma: shape must be positive");
  if (shape < 1.0) {
    // Boost: G(a) = G(a+1) * U^(1/a)
    const double g = gamma(shape + 1.0);
    const double u = uniform01_open_low();
    return g * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x, v;
    do {
      x = normal();
      v = 1.0 + c * x;
    } while (v <= 0.0);
    v = v * v * v;
    const double u = uniform01_open_low();
    if (std::log(u) < 0.5 * x * x + d - d * v + d * std::log(v)) return d * v;
  }
}

void RandomEngine::save(std::ostream& os) const { os << gen_; }

void RandomEngine::load(std::istream& is) {
  is >> gen_;
  if (!is) throw NumericalError("RandomEngine::load: malformed engine state");
}

}  // namespace mbfusion
