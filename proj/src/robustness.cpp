#include "noisebound/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "noisebound/stats.hpp"

namespace noisebound {

namespace {
constexpr int kDoublingCap = 20;
constexpr double kInf = std::numeric_limits<double>::infinity();
}  // namespace

void RobustnessQuery::validate() const {
  if (!(epsilon > 0.0 && epsilon < 1.0)) {
    throw ConfigError("epsilon must be in (0, 1)");
  }
  if (n_samples < 100) throw ConfigError("n_samples must be at least 100");
  if (const auto* b = std::get_if<BisectionSearch>(&search)) {
    if (!(b->alpha_lo > 0.0 && b->alpha_hi > b->alpha_lo)) {
      throw ConfigError("bisection needs 0 < alpha_lo < alpha_hi");
    }
    if (!(b->tol > 0.0 && b->tol < 1.0)) {
      throw ConfigError("bisection tol must be in (0, 1)");
    }
  } else {
    const auto& g = std::get<GridSearch>(search);
    if (!(g.alpha_min >= 0.0 && g.alpha_max > g.alpha_min)) {
      throw ConfigError("grid needs 0 <= alpha_min < alpha_max");
    }
    if (g.steps < 2) throw ConfigError("grid needs at least 2 steps");
    if (g.refine_rounds < 0) throw ConfigError("refine_rounds must be >= 0");
  }
}

NoiseBank::NoiseBank(const NoiseModel& noise, int d, int n,
                     std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("noise bank needs n >= 1");
  v_.resize(n, d);
  for (int i = 0; i < n; ++i) {
    RngStream rng(seed, static_cast<std::uint64_t>(i));
    v_.row(i) = sample_noise(noise, d, rng);
  }
}

namespace {

// Counts label flips of x + alpha * v over a bank. Linear models reduce
// to cached projections so that sweeping alpha costs O(n) per value.
class FlipCounter {
 public:
  FlipCounter(const Classifier& model, const Vector& x, const NoiseBank& bank)
      : model_(model), x_(x), bank_(bank), base_label_(model.label(x)) {
    if (const auto* lin = dynamic_cast<const LinearModel*>(&model)) {
      proj_ = bank.directions() * lin->weights();
      base_score_ = Vector::Constant(1, lin->decision_value(x));
      mode_ = Mode::kBinaryLinear;
    } else if (const auto* mc =
                   dynamic_cast<const MulticlassLinearModel*>(&model)) {
      proj_matrix_ = bank.directions() * mc->weight_matrix().transpose();
      base_score_ = mc->scores(x);
      mode_ = Mode::kMulticlassLinear;
    } else {
      mode_ = Mode::kGeneric;
    }
  }

  int count(double alpha) const {
    if (alpha == 0.0) return 0;
    const int n = bank_.size();
    int flips = 0;
    switch (mode_) {
      case Mode::kBinaryLinear: {
        const double f = base_score_[0];
        for (int i = 0; i < n; ++i) {
          const double fp = f + alpha * proj_[i];
          if ((fp > 0.0 ? 1 : 0) != base_label_) ++flips;
        }
        break;
      }
      case Mode::kMulticlassLinear: {
        const Eigen::Index L = base_score_.size();
        for (int i = 0; i < n; ++i) {
          int best = 0;
          double best_score = base_score_[0] + alpha * proj_matrix_(i, 0);
          for (Eigen::Index k = 1; k < L; ++k) {
            const double sk = base_score_[k] + alpha * proj_matrix_(i, k);
            if (sk > best_score) {
              best_score = sk;
              best = static_cast<int>(k);
            }
          }
          if (best != base_label_) ++flips;
        }
        break;
      }
      case Mode::kGeneric: {
        for (int i = 0; i < n; ++i) {
          const Vector xp =
              x_ + alpha * bank_.directions().row(i).transpose();
          if (model_.label(xp) != base_label_) ++flips;
        }
        break;
      }
    }
    return flips;
  }

  int size() const { return bank_.size(); }

 private:
  enum class Mode { kBinaryLinear, kMulticlassLinear, kGeneric };
  const Classifier& model_;
  const Vector& x_;
  const NoiseBank& bank_;
  int base_label_;
  Mode mode_ = Mode::kGeneric;
  Vector base_score_;
  Vector proj_;         // binary linear: w . v_i
  Matrix proj_matrix_;  // multiclass linear: n x L
};

FlipEstimate make_estimate(int flips, int n) {
  return FlipEstimate{static_cast<double>(flips) / n, wilson_interval(flips, n),
                      flips, n};
}

class SearchState {
 public:
  SearchState(const Classifier& model, const Vector& x, const NoiseBank& bank)
      : counter_(model, x, bank) {}

  const FlipEstimate& eval(double alpha) {
    auto it = evaluated_.find(alpha);
    if (it == evaluated_.end()) {
      it = evaluated_
               .emplace(alpha,
                        make_estimate(counter_.count(alpha), counter_.size()))
               .first;
    }
    return it->second;
  }

  RobustnessResult finish(double radius) const {
    RobustnessResult result;
    result.radius = radius;
    result.p_hat_at_radius = std::numeric_limits<double>::quiet_NaN();
    result.wilson_ci = {std::numeric_limits<double>::quiet_NaN(),
                        std::numeric_limits<double>::quiet_NaN()};
    for (const auto& [alpha, est] : evaluated_) {
      result.trace.push_back(TracePoint{alpha, est.p_hat, est.n});
    }
    if (std::isfinite(radius)) {
      const auto& est = evaluated_.at(radius);
      result.p_hat_at_radius = est.p_hat;
      result.wilson_ci = est.ci;
    } else if (!evaluated_.empty()) {
      const auto& est = evaluated_.rbegin()->second;
      result.p_hat_at_radius = est.p_hat;
      result.wilson_ci = est.ci;
    }
    return result;
  }

 private:
  FlipCounter counter_;
  std::map<double, FlipEstimate> evaluated_;
};

RobustnessResult bisection_search(SearchState& state,
                                  const BisectionSearch& cfg, double eps) {
  double lo, hi;
  if (state.eval(cfg.alpha_lo).p_hat >= eps) {
    lo = 0.0;
    hi = cfg.alpha_lo;
  } else {
    lo = cfg.alpha_lo;
    hi = cfg.alpha_hi;
    int doublings = 0;
    while (state.eval(hi).p_hat < eps) {
      if (++doublings > kDoublingCap || !std::isfinite(hi * 2.0)) {
        return state.finish(kInf);
      }
      lo = hi;
      hi *= 2.0;
    }
  }
  // invariant: p_hat(lo) < eps <= p_hat(hi)
  int guard = 0;
  while (hi - lo > cfg.tol * hi && ++guard < 200) {
    const double mid = 0.5 * (lo + hi);
    if (state.eval(mid).p_hat >= eps) {
      hi = mid;
    } else {
      lo = mid;
    }
  }
  return state.finish(hi);
}

RobustnessResult grid_search(SearchState& state, const GridSearch& cfg,
                             double eps) {
  double left = cfg.alpha_min;
  double right = -1.0;  // first grid alpha with p_hat >= eps
  double span_lo = cfg.alpha_min;
  double span_hi = cfg.alpha_max;
  for (int round = 0; round <= kDoublingCap && right < 0.0; ++round) {
    double prev = span_lo;
    for (int s = 0; s <= cfg.steps; ++s) {
      const double alpha = span_lo + (span_hi - span_lo) * s / cfg.steps;
      if (state.eval(alpha).p_hat >= eps) {
        left = prev;
        right = alpha;
        break;
      }
      prev = alpha;
    }
    if (right < 0.0) {
      span_lo = span_hi;
      span_hi *= 2.0;
      if (!std::isfinite(span_hi)) break;
    }
  }
  if (right < 0.0) return state.finish(kInf);
  for (int round = 0; round < cfg.refine_rounds; ++round) {
    double prev = left;
    double found = right;
    for (int s = 1; s < 10; ++s) {
      const double alpha = left + (right - left) * s / 10.0;
      if (state.eval(alpha).p_hat >= eps) {
        found = alpha;
        break;
      }
      prev = alpha;
    }
    left = prev;
    right = found;
  }
  return state.finish(right);
}

}  // namespace

FlipEstimate flip_probability(const Classifier& model, const Vector& x,
                              const NoiseBank& bank, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("alpha must be >= 0");
  FlipCounter counter(model, x, bank);
  return make_estimate(counter.count(alpha), bank.size());
}

FlipEstimate flip_probability(const Classifier& model, const Vector& x,
                              const NoiseModel& noise, double alpha, int n,
                              std::uint64_t seed) {
  NoiseBank bank(noise, static_cast<int>(x.size()), n, seed);
  return flip_probability(model, x, bank, alpha);
}

RobustnessResult robustness_radius(const Classifier& model,
                                   const RobustnessQuery& query,
                                   const NoiseBank& bank) {
  query.validate();
  if (bank.directions().cols() != query.x.size()) {
    throw std::invalid_argument("noise bank dimension does not match the point");
  }
  SearchState state(model, query.x, bank);
  if (const auto* b = std::get_if<BisectionSearch>(&query.search)) {
    return bisection_search(state, *b, query.epsilon);
  }
  return grid_search(state, std::get<GridSearch>(query.search), query.epsilon);
}

RobustnessResult robustness_radius(const Classifier& model,
                                   const RobustnessQuery& query) {
  query.validate();
  NoiseBank bank(query.noise, static_cast<int>(query.x.size()),
                 query.n_samples, query.seed);
  return robustness_radius(model, query, bank);
}

}  // namespace noisebound
