#include "noisebound/quantize.hpp"

#include <algorithm>
#include <cmath>

#include "noisebound/bounds.hpp"
#include "noisebound/geometry.hpp"
#include "noisebound/rng.hpp"

namespace noisebound {

QuantizedImage quantize_image(const Vector& x, int bits, bool dither,
                              std::uint64_t seed) {
  if (bits < 1 || bits > 8) {
    throw std::invalid_argument("bits must be in [1, 8]");
  }
  const int levels = 1 << bits;
  const double delta = 255.0 / (levels - 1);
  QuantizedImage out;
  out.values.resize(x.size());
  out.input_clamped = false;
  RngStream rng(seed, static_cast<std::uint64_t>(bits));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    double v = x[i];
    if (v < 0.0 || v > 255.0) {
      v = std::clamp(v, 0.0, 255.0);
      out.input_clamped = true;
    }
    if (dither) v += rng.uniform(-delta / 2.0, delta / 2.0);
    double k = std::round(v / delta);
    k = std::clamp(k, 0.0, static_cast<double>(levels - 1));
    out.values[i] = k * delta;
  }
  return out;
}

QuantizationReport min_bits_preserving_label(const Classifier& model,
                                             const Vector& x, bool dither,
                                             std::uint64_t seed, double zeta0,
                                             double r_star_inf) {
  const int original = model.label(x);
  int measured = 9;
  for (int bits = 1; bits <= 8; ++bits) {
    QuantizedImage q = quantize_image(x, bits, dither, seed);
    if (model.label(q.values) == original) {
      measured = bits;
      break;
    }
  }
  const QuantizationPrediction pred =
      quantization_prediction(r_star_inf, static_cast<int>(x.size()), zeta0);
  QuantizationReport report;
  report.predicted_bits = pred.bits;
  report.predicted_levels = pred.levels;
  report.predicted_depth = pred.depth;
  report.measured_bits = measured;
  report.r_star_inf = r_star_inf;
  report.agreed_within_one_bit = std::abs(pred.depth - measured) <= 1;
  return report;
}

QuantizationReport min_bits_preserving_label(const Classifier& model,
                                             const Vector& x, bool dither,
                                             std::uint64_t seed, double zeta0) {
  const AdversarialResult adv =
      min_perturbation(model, x, PExponent::infinity(), {});
  if (!adv.converged) {
    throw NumericError("adversarial l_inf search did not converge");
  }
  return min_bits_preserving_label(model, x, dither, seed, zeta0, adv.norm);
}

}  // namespace noisebound
