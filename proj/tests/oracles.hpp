#ifndef NOISEBOUND_TESTS_ORACLES_HPP
#define NOISEBOUND_TESTS_ORACLES_HPP

// Test-side reference computations, kept independent of the library
// code paths they are used to check.

#include <cstdint>
#include <functional>

#include "noisebound/common.hpp"

namespace noisebound::oracles {

/// Minimal ||z - x||_p subject to w.z + b = 0, computed numerically:
/// reduced projected (sub)gradient descent with backtracking from
/// `restarts` random feasible starts for finite p > 1, exact vertex
/// enumeration for p = 1 (single coordinates) and p = inf (sign
/// patterns, so d must stay small).
double hyperplane_distance(const Vector& w, double b, const Vector& x,
                           PExponent p, int restarts = 50,
                           std::uint64_t seed = 0);

/// Central finite differences with per-coordinate step 1e-6 (1 + |x_i|).
Vector finite_difference_gradient(const std::function<double(const Vector&)>& f,
                                  const Vector& x);

/// Random orthonormal matrix (QR of a seeded Gaussian matrix).
Matrix random_orthonormal(int d, std::uint64_t seed);

/// Empirical covariance (mean removed) of sample rows.
Matrix empirical_covariance(const Matrix& samples);

}  // namespace noisebound::oracles

#endif
