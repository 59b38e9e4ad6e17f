#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace harris {

/// Deterministic random stream identified by (seed, stream_id).
///
/// The engine is std::mt19937_64 (period 2^19937 - 1). It is initialised
/// through std::seed_seq over the 32-bit words
///   { seed_lo, seed_hi, stream_lo, stream_hi, 0x48415252 }
/// so distinct stream ids for one seed give distinct engine states. Both
/// mt19937_64 and seed_seq are fully specified by the standard, and the
/// variate transforms below are written out here instead of going through
/// the (implementation-defined) <random> distributions, so a stream yields
/// the same numbers on every conforming platform.
class RngStream {
 public:
  RngStream(std::uint64_t seed, std::uint64_t stream_id)
      : seed_(seed), stream_id_(stream_id), engine_(make_engine(seed, stream_id)) {}

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on the open interval (0, 1); 53 random bits, never 0 or 1.
  double uniform() { return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform index in [0, n). Requires n > 0.
  std::size_t uniform_index(std::size_t n) {
    auto k = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return k < n ? k : n - 1;
  }

  bool bernoulli(double p) { return uniform() < p; }

  /// Standard normal via the Marsaglia polar method.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    has_spare_ = true;
    return u * m;
  }

  double normal(double mean, double sd) { return mean + sd * normal(); }

 private:
  static std::mt19937_64 make_engine(std::uint64_t seed, std::uint64_t stream_id) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream_id),
                      static_cast<std::uint32_t>(stream_id >> 32), 0x48415252u};
    return std::mt19937_64(seq);
  }

  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Stream for replica `replica` of an experiment seeded with `seed`.
inline RngStream derive_stream(std::uint64_t seed, std::uint64_t replica) {
  return RngStream(seed, replica);
}

inline double standard_normal_log_pdf(double z) {
  return -0.5 * z * z - 0.5 * std::log(2.0 * std::numbers::pi);
}

}  // namespace harris
