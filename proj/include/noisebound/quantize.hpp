#ifndef NOISEBOUND_QUANTIZE_HPP
#define NOISEBOUND_QUANTIZE_HPP

#include <cstdint>

#include "noisebound/common.hpp"
#include "noisebound/models.hpp"

namespace noisebound {

struct QuantizedImage {
  Vector values;       // every coordinate an exact level value
  bool input_clamped;  // some input coordinate fell outside [0, 255]
};

/// Uniform quantizer with 2^bits levels on [0, 255], step
/// delta = 255/(2^bits - 1), nearest-level snapping. With dither, adds
/// seeded uniform noise on [-delta/2, delta/2) before snapping.
/// Out-of-range inputs are clamped and flagged rather than rejected.
QuantizedImage quantize_image(const Vector& x, int bits, bool dither,
                              std::uint64_t seed);

struct QuantizationReport {
  double predicted_bits;
  double predicted_levels;
  int predicted_depth;     // ceil(predicted_bits) clamped to [1, 8]
  int measured_bits;       // smallest label-preserving depth; 9 if none
  double r_star_inf;
  bool agreed_within_one_bit;
};

/// Scans depths 1..8 and reports the first one whose quantized image
/// keeps the original label, next to the prediction derived from the
/// worst-case l_inf distance.
QuantizationReport min_bits_preserving_label(const Classifier& model,
                                             const Vector& x, bool dither,
                                             std::uint64_t seed,
                                             double zeta0 = 0.72);

/// Same, with a precomputed adversarial distance (skips the search).
QuantizationReport min_bits_preserving_label(const Classifier& model,
                                             const Vector& x, bool dither,
                                             std::uint64_t seed, double zeta0,
                                             double r_star_inf);

}  // namespace noisebound

#endif
