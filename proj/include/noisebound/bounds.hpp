#ifndef NOISEBOUND_BOUNDS_HPP
#define NOISEBOUND_BOUNDS_HPP

#include <optional>
#include <vector>

#include "noisebound/common.hpp"
#include "noisebound/models.hpp"
#include "noisebound/noise.hpp"

namespace noisebound {

/// Calibratable constants behind the lp bounds. The moment constants
/// C0, c0 have no published numeric values; the defaults are 1 and a
/// run can calibrate them so the two-sided bound holds on measured
/// data. zeta0 scales the point estimate.
struct BoundConstants {
  double C0 = 1.0;
  double c0 = 1.0;
  double zeta0 = 0.72;

  double C() const { return 1.0 / (std::sqrt(2.0) * C0); }
  double c() const { return c0 * c0; }
  double c_prime() const { return 512.0 * C0 * C0 * C0 * C0; }
  double eps0() const { return c() * c() / c_prime(); }

  void validate() const;
};

/// Two-sided bound on radius / ||r*||, in ratio units (multiply by the
/// adversarial norm for radius units). `valid` reports whether epsilon
/// sits inside the constants' validity range and, for the locally-flat
/// variants,
/// whether the locality radius eta is admissible.
struct BoundReport {
  double lower = 0.0;
  double upper = 0.0;
  double factor = 0.0;  // d^(1/p) ||w||_p' / ||w||_2, or ||w||_2 / ||sqrt(S)w||_2
  double epsilon = 0.0;
  bool valid = false;
  std::optional<double> estimate;
  std::optional<double> eta_required;  // locally-flat variants only
};

/// d^(1/p) * ||w||_p' / ||w||_2.
double lp_factor(const Vector& w, PExponent p);

/// zeta1(eps) * factor <= radius/||r*|| <= zeta2(eps) * factor with
/// zeta1 = C sqrt(eps) and zeta2 = 1/sqrt(c - sqrt(c' eps)). With
/// alt_lower and p > 1, the lower constant may be improved to
/// C'/sqrt(ln(3/eps)) * (1 - 1/min(p,2)), C' = 1/(2 e^2 C0^2).
BoundReport lp_bounds(const Vector& w, PExponent p, double epsilon,
                      const BoundConstants& constants, bool alt_lower = false);

/// Large-d limit of lp_factor / sqrt(d) for a weight direction uniform
/// on the unit sphere: sqrt(2) (Gamma((2p-1)/(2(p-1))) / sqrt(pi))^(1-1/p)
/// for p > 1; for p = 1 the limit object is sqrt(2 ln d), so that
/// factor * sqrt(d) ~ sqrt(2 d ln d).
double asymptotic_factor(PExponent p, int d);

/// Point estimate of the robustness radius:
/// zeta0 * sqrt(d) * asymptotic_factor(p, d) * ||r*||_p.
double robustness_estimate(PExponent p, int d, double r_star_norm,
                           double zeta0);

/// ||w||_2 / ||sqrt(Sigma) w||_2. Errors when w is in the null space.
double gaussian_factor(const Vector& w, const CovarianceSpec& sigma);

/// zeta1'(eps) = sqrt(1/(2 ln(1/eps))), zeta2'(eps) = sqrt(1/(1-sqrt(3 eps))),
/// valid for eps < 1/3.
BoundReport gaussian_bounds(const Vector& w, const CovarianceSpec& sigma,
                            double epsilon);

/// lp bounds for a locally approximately flat boundary with slack gamma,
/// computed from the gradient at the nearest boundary point. The lower
/// and upper constants pick up factors (1-gamma) and (1+gamma);
/// admissibility requires eta >= (1+gamma) zeta2(eps) factor ||r*||_p.
BoundReport laf_lp_bounds(const Vector& grad_at_xstar, PExponent p,
                          double epsilon, double gamma, double eta,
                          double r_star_norm, const BoundConstants& constants);

/// Gaussian analogue with split epsilon arguments (eps/2 and 3 eps/2)
/// and the norm-overshoot allowance psi(eps) = 8 Tr(Sigma^2) ln(4/eps)
/// in the eta condition; requires eps < 1/6.
BoundReport laf_gaussian_bounds(const Vector& grad_at_xstar,
                                const CovarianceSpec& sigma, double epsilon,
                                double gamma, double eta, double r_star_norm);

struct TailBound {
  double t_prime;
  double prob_bound;  // capped at 1
};

/// Concentration of (||w||_2 / ||sqrt(Sigma) w||_2)^2 around d for a
/// uniformly random unit w: P{ |ratio^2 - d| >= 2.5 t } is at most
/// 2 exp(-t^2/(8d)) + 2 exp(-t^2/(8 d^2 Tr(S^2))) + 2 exp(-1/(200 Tr(S^2))),
/// capped at 1. The exponential form is guaranteed for
/// t <= (sqrt(pi)/8) d; past that only the trivial bound 1 is reported.
TailBound gaussian_factor_tail_bound(int d, const CovarianceSpec& sigma,
                                     double t);

/// Multi-class lp bounds: the upper constant applies to the boundary
/// class of the adversarial perturbation, the lower one to the class
/// minimizing the factor, with epsilon split across the L-1 competitors.
BoundReport multiclass_lp_bounds(const MulticlassLinearModel& model,
                                 const Vector& x, PExponent p, double epsilon,
                                 const BoundConstants& constants);

struct QuantizationPrediction {
  double delta;   // tolerable quantization step
  double levels;  // 255 / delta
  double bits;    // log2(levels)
  int depth;      // ceil(bits) clamped to [1, 8]
};

/// Predicted tolerable quantization from the worst-case l_inf distance:
/// delta = (2 zeta0 / sqrt(pi)) sqrt(d) ||r*_inf||.
QuantizationPrediction quantization_prediction(double r_star_inf, int d,
                                               double zeta0);

struct CalibrationPair {
  double empirical_radius;
  PExponent p;
  int d;
  double r_star_norm;
};

/// Least-squares zeta0 over (empirical, estimate-at-zeta0=1) pairs;
/// closed-form ratio of inner products.
double calibrate_zeta0(const std::vector<CalibrationPair>& pairs);

/// Fits C0 and c0 so the lp band covers every observed
/// radius/(||r*|| * factor) ratio with a small margin. zeta0 is kept.
BoundConstants calibrate_constants(const std::vector<double>& ratio_over_factor,
                                   double epsilon, double margin = 1.05,
                                   double zeta0 = 0.72);

}  // namespace noisebound

#endif
