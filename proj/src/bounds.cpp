#include "noisebound/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "noisebound/geometry.hpp"

namespace noisebound {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

double zeta1(double eps, const BoundConstants& k) {
  return k.C() * std::sqrt(eps);
}

double zeta1_alt(double eps, PExponent p, const BoundConstants& k) {
  const double c_alt = 1.0 / (2.0 * std::exp(2.0) * k.C0 * k.C0);
  const double p2 = std::min(p.is_inf() ? 2.0 : p.value(), 2.0);
  return c_alt / std::sqrt(std::log(3.0 / eps)) * (1.0 - 1.0 / p2);
}

// Returns +inf when the radicand is non-positive.
double zeta2(double eps, const BoundConstants& k) {
  const double radicand = k.c() - std::sqrt(k.c_prime() * eps);
  if (radicand <= 0.0) return kInf;
  return 1.0 / std::sqrt(radicand);
}

double gauss_zeta1(double eps) { return std::sqrt(1.0 / (2.0 * std::log(1.0 / eps))); }

double gauss_zeta2(double eps) {
  const double radicand = 1.0 - std::sqrt(3.0 * eps);
  if (radicand <= 0.0) return kInf;
  return 1.0 / std::sqrt(radicand);
}

void check_epsilon(double eps) {
  if (!(eps > 0.0 && eps < 1.0)) {
    throw std::invalid_argument("epsilon must be in (0, 1)");
  }
}

}  // namespace

void BoundConstants::validate() const {
  if (!(C0 > 0.0) || !(c0 > 0.0) || !(zeta0 > 0.0)) {
    throw ConfigError("bound constants must be positive");
  }
}

double lp_factor(const Vector& w, PExponent p) {
  const double n2 = w.norm();
  if (n2 == 0.0) throw std::invalid_argument("lp_factor: zero weight vector");
  const double dpow =
      p.is_inf() ? 1.0 : std::pow(static_cast<double>(w.size()), 1.0 / p.value());
  return dpow * dual_norm(w, p) / n2;
}

BoundReport lp_bounds(const Vector& w, PExponent p, double epsilon,
                      const BoundConstants& constants, bool alt_lower) {
  check_epsilon(epsilon);
  constants.validate();
  const double factor = lp_factor(w, p);
  double z1 = zeta1(epsilon, constants);
  if (alt_lower && !p.is_one()) {
    z1 = std::max(z1, zeta1_alt(epsilon, p, constants));
  }
  const double z2 = zeta2(epsilon, constants);
  BoundReport report;
  report.lower = z1 * factor;
  report.upper = z2 * factor;
  report.factor = factor;
  report.epsilon = epsilon;
  report.valid = epsilon < constants.eps0() && std::isfinite(z2);
  return report;
}

double asymptotic_factor(PExponent p, int d) {
  if (d < 2) throw std::invalid_argument("asymptotic_factor needs d >= 2");
  if (p.is_one()) return std::sqrt(2.0 * std::log(static_cast<double>(d)));
  if (p.is_inf()) return std::sqrt(2.0 / M_PI);
  const double arg = (2.0 * p.value() - 1.0) / (2.0 * (p.value() - 1.0));
  return std::sqrt(2.0) *
         std::pow(std::tgamma(arg) / std::sqrt(M_PI), 1.0 - 1.0 / p.value());
}

double robustness_estimate(PExponent p, int d, double r_star_norm,
                           double zeta0) {
  if (!(r_star_norm > 0.0)) {
    throw std::invalid_argument("robustness_estimate needs r_star_norm > 0");
  }
  return zeta0 * std::sqrt(static_cast<double>(d)) * asymptotic_factor(p, d) *
         r_star_norm;
}

double gaussian_factor(const Vector& w, const CovarianceSpec& sigma) {
  if (static_cast<int>(w.size()) != sigma.dim()) {
    throw std::invalid_argument("gaussian_factor: dimension mismatch");
  }
  const double n2 = w.norm();
  if (n2 == 0.0) throw std::invalid_argument("gaussian_factor: zero vector");
  const double denom = (sigma.sqrt_matrix() * w).norm();
  if (denom == 0.0) {
    throw NumericError("gaussian_factor: w lies in the null space of Sigma");
  }
  return n2 / denom;
}

BoundReport gaussian_bounds(const Vector& w, const CovarianceSpec& sigma,
                            double epsilon) {
  check_epsilon(epsilon);
  const double factor = gaussian_factor(w, sigma);
  BoundReport report;
  report.lower = gauss_zeta1(epsilon) * factor;
  report.upper = gauss_zeta2(epsilon) * factor;
  report.factor = factor;
  report.epsilon = epsilon;
  report.valid = epsilon < 1.0 / 3.0;
  return report;
}

BoundReport laf_lp_bounds(const Vector& grad_at_xstar, PExponent p,
                          double epsilon, double gamma, double eta,
                          double r_star_norm, const BoundConstants& constants) {
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must be in [0, 1)");
  }
  BoundReport report = lp_bounds(grad_at_xstar, p, epsilon, constants);
  report.eta_required =
      (1.0 + gamma) * report.upper * r_star_norm;
  report.lower *= (1.0 - gamma);
  report.upper *= (1.0 + gamma);
  report.valid = report.valid && eta >= *report.eta_required;
  return report;
}

BoundReport laf_gaussian_bounds(const Vector& grad_at_xstar,
                                const CovarianceSpec& sigma, double epsilon,
                                double gamma, double eta, double r_star_norm) {
  check_epsilon(epsilon);
  if (!(gamma >= 0.0 && gamma < 1.0)) {
    throw std::invalid_argument("gamma must be in [0, 1)");
  }
  if (!(epsilon < 1.0 / 6.0)) {
    throw std::invalid_argument(
        "laf_gaussian_bounds needs epsilon < 1/6 (half the Gaussian range)");
  }
  const double factor = gaussian_factor(grad_at_xstar, sigma);
  const double psi =
      8.0 * sigma.trace_squared() * std::log(4.0 / epsilon);
  BoundReport report;
  report.lower = (1.0 - gamma) * gauss_zeta1(epsilon / 2.0) * factor;
  report.upper = (1.0 + gamma) * gauss_zeta2(1.5 * epsilon) * factor;
  report.factor = factor;
  report.epsilon = epsilon;
  report.eta_required = (1.0 + gamma) * (1.0 + psi) *
                        gauss_zeta2(1.5 * epsilon) * factor * r_star_norm;
  report.valid = std::isfinite(report.upper) && eta >= *report.eta_required;
  return report;
}

TailBound gaussian_factor_tail_bound(int d, const CovarianceSpec& sigma,
                                     double t) {
  if (d < 1 || sigma.dim() != d) {
    throw std::invalid_argument("gaussian_factor_tail_bound: bad dimension");
  }
  if (!(t > 0.0)) {
    throw std::invalid_argument("gaussian_factor_tail_bound needs t > 0");
  }
  // Beyond t = sqrt(pi)/8 * d the exponential form is no longer a
  // guaranteed bound, so only the trivial one is reported there.
  if (t > std::sqrt(M_PI) / 8.0 * d) return TailBound{2.5 * t, 1.0};
  const double tr2 = sigma.trace_squared();
  const double bound = 2.0 * std::exp(-t * t / (8.0 * d)) +
                       2.0 * std::exp(-t * t / (8.0 * d * d * tr2)) +
                       2.0 * std::exp(-1.0 / (200.0 * tr2));
  return TailBound{2.5 * t, std::min(1.0, bound)};
}

BoundReport multiclass_lp_bounds(const MulticlassLinearModel& model,
                                 const Vector& x, PExponent p, double epsilon,
                                 const BoundConstants& constants) {
  check_epsilon(epsilon);
  constants.validate();
  const int k = model.label(x);
  const int L = model.num_classes();
  const AdversarialResult adv = multiclass_linear_min_perturbation(model, x, p);

  // j' minimizes the factor itself; ties go to the smallest index.
  double best_factor = kInf;
  for (int l = 0; l < L; ++l) {
    if (l == k) continue;
    const double f = lp_factor(model.class_weight(k) - model.class_weight(l), p);
    if (f < best_factor) best_factor = f;
  }

  const Vector w_upper =
      model.class_weight(k) - model.class_weight(adv.target_class);
  const double upper_factor = lp_factor(w_upper, p);
  const double z1 = zeta1(epsilon / (L - 1), constants);
  const double z2 = zeta2(epsilon, constants);

  BoundReport report;
  report.lower = z1 * best_factor;
  report.upper = z2 * upper_factor;
  report.factor = upper_factor;
  report.epsilon = epsilon;
  report.valid = epsilon < constants.eps0() && std::isfinite(z2);
  return report;
}

QuantizationPrediction quantization_prediction(double r_star_inf, int d,
                                               double zeta0) {
  if (!(r_star_inf > 0.0)) {
    throw std::invalid_argument("quantization_prediction needs r_star_inf > 0");
  }
  QuantizationPrediction out;
  out.delta = 2.0 * zeta0 / std::sqrt(M_PI) * std::sqrt(static_cast<double>(d)) *
              r_star_inf;
  out.levels = 255.0 / out.delta;
  out.bits = std::log2(out.levels);
  out.depth = static_cast<int>(
      std::clamp(std::ceil(out.bits), 1.0, 8.0));
  return out;
}

double calibrate_zeta0(const std::vector<CalibrationPair>& pairs) {
  if (pairs.empty()) throw std::invalid_argument("calibrate_zeta0: no pairs");
  double num = 0.0, den = 0.0;
  for (const auto& pair : pairs) {
    if (!std::isfinite(pair.empirical_radius)) {
      throw std::invalid_argument("calibrate_zeta0: non-finite radius");
    }
    const double base = robustness_estimate(pair.p, pair.d, pair.r_star_norm,
                                            1.0);
    num += pair.empirical_radius * base;
    den += base * base;
  }
  if (den == 0.0) throw NumericError("calibrate_zeta0: degenerate fit");
  return num / den;
}

BoundConstants calibrate_constants(const std::vector<double>& ratio_over_factor,
                                   double epsilon, double margin,
                                   double zeta0) {
  check_epsilon(epsilon);
  if (ratio_over_factor.empty()) {
    throw std::invalid_argument("calibrate_constants: no ratios");
  }
  if (!(margin >= 1.0)) {
    throw std::invalid_argument("calibrate_constants: margin must be >= 1");
  }
  double lo = kInf, hi = 0.0;
  for (double r : ratio_over_factor) {
    if (!(r > 0.0) || !std::isfinite(r)) {
      throw std::invalid_argument("calibrate_constants: ratios must be finite and positive");
    }
    lo = std::min(lo, r);
    hi = std::max(hi, r);
  }
  // zeta1(eps) = lo/margin fixes C0; then zeta2(eps) = hi*margin fixes
  // c0 with the C0-dependent term added back, which keeps eps < eps0.
  const double z1_target = lo / margin;
  const double z2_target = hi * margin;
  BoundConstants k;
  k.zeta0 = zeta0;
  k.C0 = std::sqrt(epsilon) / (std::sqrt(2.0) * z1_target);
  const double c0_sq = 1.0 / (z2_target * z2_target) +
                       k.C0 * k.C0 * std::sqrt(512.0 * epsilon);
  k.c0 = std::sqrt(c0_sq);
  return k;
}

}  // namespace noisebound
