#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>

namespace mbfusion {

// mt19937_64 plus hand-written transforms so every draw is a fixed function
// of the engine stream. std::normal_distribution and friends are
// implementation-defined and cache state, which would break bit-exact
// checkpoint/resume; these do not.
class RandomEngine {
 public:
  explicit RandomEngine(std::uint64_t seed) : gen_(seed) {}

  /// Child stream derived from (master, stream_id); used to give each
  /// noise source / chain its own reproducible stream.
  static RandomEngine stream(std::uint64_t master, std::uint64_t stream_id);

  std::uint64_t next_u64() { return gen_(); }

  /// Uniform on [0, 1) with 53-bit resolution.
  double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe to pass to log().
  double uniform01_open_low() { return 1.0 - uniform01(); }

  /// Uniform integer in [lo, hi] inclusive (unbiased rejection).
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Standard normal via one-value Box-Muller (two uniforms, no cache).
  double normal();

  /// Gamma(shape, rate 1) via Marsaglia-Tsang; shape > 0.
  double gamma(double shape);

  double chi_squared(double dof) { return 2.0 * gamma(0.5 * dof); }

  /// Engine state as the standardized mt19937_64 text representation.
  void save(std::ostream& os) const;
  void load(std::istream& is);

  bool operator==(const RandomEngine& other) const { return gen_ == other.gen_; }

 private:
  std::mt19937_64 gen_;
};

}  // namespace mbfusion
