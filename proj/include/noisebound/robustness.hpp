#ifndef NOISEBOUND_ROBUSTNESS_HPP
#define NOISEBOUND_ROBUSTNESS_HPP

#include <cstdint>
#include <utility>
#include <variant>
#include <vector>

#include "noisebound/models.hpp"
#include "noisebound/noise.hpp"

namespace noisebound {

/// Use only when the flip probability is known monotone in alpha (true
/// for linear models).
struct BisectionSearch {
  double alpha_lo = 1e-3;
  double alpha_hi = 1.0;
  double tol = 1e-3;  // relative bracket width
};

struct GridSearch {
  double alpha_min = 0.0;
  double alpha_max = 1.0;
  int steps = 50;
  int refine_rounds = 2;
};

using SearchStrategy = std::variant<BisectionSearch, GridSearch>;

struct RobustnessQuery {
  Vector x;
  NoiseModel noise;
  double epsilon;
  int n_samples = 10000;
  std::uint64_t seed = 0;
  SearchStrategy search = BisectionSearch{};

  void validate() const;
};

struct TracePoint {
  double alpha;
  double p_hat;
  int n;
};

struct RobustnessResult {
  double radius;  // +inf when epsilon is unreachable within the doubling cap
  double p_hat_at_radius;
  std::pair<double, double> wilson_ci;
  std::vector<TracePoint> trace;  // strictly increasing alphas
};

struct FlipEstimate {
  double p_hat;
  std::pair<double, double> ci;
  int flips;
  int n;
};

/// Pre-drawn noise directions: row i comes from the sub-stream
/// (seed, i), so a bank is a pure function of (noise, d, n, seed) and a
/// radius search reusing one is identical to re-drawing per evaluation.
class NoiseBank {
 public:
  NoiseBank(const NoiseModel& noise, int d, int n, std::uint64_t seed);
  const Matrix& directions() const { return v_; }
  int size() const { return static_cast<int>(v_.rows()); }

 private:
  Matrix v_;
};

/// Fraction of n noise draws that flip the label of x + alpha v, with
/// its 95% Wilson interval. Deterministic given the seed.
FlipEstimate flip_probability(const Classifier& model, const Vector& x,
                              const NoiseModel& noise, double alpha, int n,
                              std::uint64_t seed);
FlipEstimate flip_probability(const Classifier& model, const Vector& x,
                              const NoiseBank& bank, double alpha);

/// Smallest alpha with p_hat(alpha) >= epsilon, by bisection or grid
/// scan per the query. Caps geometric range extension at 20 doublings,
/// then reports +inf. The decision uses p_hat point estimates; the CI is
/// reported only.
RobustnessResult robustness_radius(const Classifier& model,
                                   const RobustnessQuery& query);
/// Reuses pre-drawn directions; the bank's sample count and seed
/// supersede the query's.
RobustnessResult robustness_radius(const Classifier& model,
                                   const RobustnessQuery& query,
                                   const NoiseBank& bank);

}  // namespace noisebound

#endif
