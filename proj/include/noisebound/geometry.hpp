#ifndef NOISEBOUND_GEOMETRY_HPP
#define NOISEBOUND_GEOMETRY_HPP

#include "noisebound/common.hpp"
#include "noisebound/models.hpp"

namespace noisebound {

struct AdversarialResult {
  Vector r_star;     // the perturbation
  double norm;       // ||r_star||_p
  PExponent p;
  int target_class;  // class reached at the boundary
  int iterations;    // 0 for closed forms
  bool converged;
};

/// Minimal lp perturbation of x onto the hyperplane f(z) = 0. The norm
/// is |f(x)| / ||w||_p' with p' the conjugate exponent; the direction is
/// the tangency point of the lp ball with the hyperplane (p = 1 puts all
/// mass on one coordinate of maximal |w_i|, smallest index on ties).
AdversarialResult linear_min_perturbation(const LinearModel& model,
                                          const Vector& x, PExponent p);

/// Closed-form multi-class distance: minimizes the pairwise hyperplane
/// distance (f_k - f_l) / ||w_k - w_l||_p' over l != k and reports the
/// minimizing class.
AdversarialResult multiclass_linear_min_perturbation(
    const MulticlassLinearModel& model, const Vector& x, PExponent p);

struct IterativeConfig {
  int max_iter = 50;
  double overshoot = 0.02;
  double tol = 1e-12;  // minimal dual norm of the local gradient
};

/// Linearize-and-project search: each step applies the closed-form
/// hyperplane distance to the local linearization, scaled by
/// (1 + overshoot). Non-convergence is reported, not thrown.
AdversarialResult iterative_min_perturbation(
    const DifferentiableClassifier& model, const Vector& x, PExponent p,
    const IterativeConfig& config = {});

/// Dispatch: exact closed form for (multi-class) linear models, the
/// iterative search otherwise.
AdversarialResult min_perturbation(const Classifier& model, const Vector& x,
                                   PExponent p,
                                   const IterativeConfig& config = {});

}  // namespace noisebound

#endif
