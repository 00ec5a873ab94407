#ifndef NOISEBOUND_RNG_HPP
#define NOISEBOUND_RNG_HPP

#include <cstdint>

namespace noisebound {

/// Counter-based pseudorandom stream. Output i is a 64-bit hash of
/// (key, i), where the key is derived from (master_seed, stream_index),
/// so independent sub-streams are cheap to create: two streams built
/// from the same master seed but different indices never share state.
class RngStream {
 public:
  explicit RngStream(std::uint64_t master_seed, std::uint64_t stream_index = 0);

  std::uint64_t next_u64();

  /// Uniform on [0, 1).
  double uniform01();
  double uniform(double a, double b);

  /// Standard normal (Box-Muller, second variate cached).
  double normal();

  /// Standard exponential, rate 1.
  double exponential();

  /// Gamma(shape, scale 1), shape > 0. Marsaglia-Tsang squeeze, with the
  /// usual u^(1/a) boost for shape < 1.
  double gamma(double shape);

  /// Variate with density proportional to exp(-|t|^p), p >= 1.
  double generalized_gaussian(double p);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

}  // namespace noisebound

#endif
