#include "noisebound/geometry.hpp"

#include <cmath>
#include <limits>

namespace noisebound {
namespace {

double sign(double t) { return t > 0.0 ? 1.0 : (t < 0.0 ? -1.0 : 0.0); }

// Minimal-lp step r with w.r = -fval, from the tangency conditions of
// the lp ball against the hyperplane.
Vector hyperplane_step(const Vector& w, double fval, PExponent p) {
  const Eigen::Index d = w.size();
  Vector r = Vector::Zero(d);
  if (p.is_one()) {
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < d; ++i) {
      if (std::abs(w[i]) > std::abs(w[best])) best = i;
    }
    r[best] = -fval / w[best];
    return r;
  }
  if (p.is_inf()) {
    const double l1 = w.cwiseAbs().sum();
    for (Eigen::Index i = 0; i < d; ++i) {
      r[i] = -sign(fval) * sign(w[i]) * std::abs(fval) / l1;
    }
    return r;
  }
  // Work with w scaled by its largest coordinate: the direction is
  // scale-invariant and the conjugate exponent can be huge for p near 1.
  const double pp = p.conjugate().value();
  const double m = w.cwiseAbs().maxCoeff();
  double norm_pp = 0.0;
  for (Eigen::Index i = 0; i < d; ++i) {
    norm_pp += std::pow(std::abs(w[i]) / m, pp);
  }
  for (Eigen::Index i = 0; i < d; ++i) {
    r[i] = -sign(fval) * sign(w[i]) *
           std::pow(std::abs(w[i]) / m, pp - 1.0) * std::abs(fval) /
           (norm_pp * m);
  }
  return r;
}

}  // namespace

AdversarialResult linear_min_perturbation(const LinearModel& model,
                                          const Vector& x, PExponent p) {
  const double f = model.decision_value(x);
  if (f == 0.0) {
    throw NumericError("point lies exactly on the decision boundary");
  }
  Vector r = hyperplane_step(model.weights(), f, p);
  return AdversarialResult{r, std::abs(f) / dual_norm(model.weights(), p), p,
                           1 - model.label(x), 0, true};
}

AdversarialResult multiclass_linear_min_perturbation(
    const MulticlassLinearModel& model, const Vector& x, PExponent p) {
  const Vector s = model.scores(x);
  const int k = model.label(x);
  const int L = model.num_classes();
  for (int l = 0; l < L; ++l) {
    if (l != k && s[l] == s[k]) {
      throw NumericError("argmax tie at the query point");
    }
  }
  int best = -1;
  double best_dist = std::numeric_limits<double>::infinity();
  for (int l = 0; l < L; ++l) {
    if (l == k) continue;
    const Vector w = model.class_weight(k) - model.class_weight(l);
    const double dist = (s[k] - s[l]) / dual_norm(w, p);
    if (dist < best_dist) {
      best_dist = dist;
      best = l;
    }
  }
  const Vector w = model.class_weight(k) - model.class_weight(best);
  Vector r = hyperplane_step(w, s[k] - s[best], p);
  return AdversarialResult{r, best_dist, p, best, 0, true};
}

AdversarialResult iterative_min_perturbation(
    const DifferentiableClassifier& model, const Vector& x, PExponent p,
    const IterativeConfig& config) {
  const int k0 = model.label(x);
  Vector cur = x;
  Vector total = Vector::Zero(x.size());
  int target = -1;
  bool converged = false;
  int it = 0;
  while (it < config.max_iter) {
    ++it;
    const Vector s = model.scores(cur);
    const Matrix jac = model.score_jacobian(cur);
    Vector w;
    double fval;
    if (s.size() == 1) {
      w = jac.row(0);
      fval = s[0];
      target = 1 - k0;
    } else {
      int best = -1;
      double best_dist = std::numeric_limits<double>::infinity();
      for (Eigen::Index l = 0; l < s.size(); ++l) {
        if (static_cast<int>(l) == k0) continue;
        Vector wl = jac.row(k0) - jac.row(l);
        double dn = dual_norm(wl, p);
        if (dn < config.tol) continue;
        double dist = std::abs(s[k0] - s[l]) / dn;
        if (dist < best_dist) {
          best_dist = dist;
          best = static_cast<int>(l);
        }
      }
      if (best < 0) break;  // all pairwise gradients degenerate
      w = jac.row(k0) - jac.row(best);
      fval = s[k0] - s[best];
      target = best;
    }
    if (dual_norm(w, p) < config.tol) break;
    const Vector step = (1.0 + config.overshoot) * hyperplane_step(w, fval, p);
    cur += step;
    total += step;
    if (model.label(cur) != k0) {
      converged = true;
      break;
    }
  }
  if (converged && model.num_classes() > 2) target = model.label(cur);
  return AdversarialResult{total, lp_norm(total, p), p, target, it, converged};
}

AdversarialResult min_perturbation(const Classifier& model, const Vector& x,
                                   PExponent p, const IterativeConfig& config) {
  if (const auto* lin = dynamic_cast<const LinearModel*>(&model)) {
    return linear_min_perturbation(*lin, x, p);
  }
  if (const auto* mc = dynamic_cast<const MulticlassLinearModel*>(&model)) {
    return multiclass_linear_min_perturbation(*mc, x, p);
  }
  if (const auto* diff = dynamic_cast<const DifferentiableClassifier*>(&model)) {
    return iterative_min_perturbation(*diff, x, p, config);
  }
  throw std::invalid_argument("no adversarial search for this classifier kind");
}

}  // namespace noisebound
