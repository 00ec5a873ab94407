#ifndef NOISEBOUND_NOISE_HPP
#define NOISEBOUND_NOISE_HPP

#include <string>
#include <variant>

#include "noisebound/common.hpp"
#include "noisebound/rng.hpp"

namespace noisebound {

/// Dense PSD covariance with a cached symmetric square root. Eigenvalues
/// below -1e-12 * lambda_max are rejected; small negatives are clamped
/// to zero, so singular covariances (e.g. the signal-dependent ones) are
/// fine where a Cholesky factorization would not be.
class CovarianceSpec {
 public:
  explicit CovarianceSpec(Matrix sigma, bool unit_trace = false);

  /// White noise, Sigma = I/d (unit trace).
  static CovarianceSpec white(int d);

  int dim() const { return static_cast<int>(sigma_.rows()); }
  double trace() const { return sigma_.trace(); }
  bool unit_trace() const { return unit_trace_; }
  const Matrix& matrix() const { return sigma_; }
  const Matrix& sqrt_matrix() const { return sqrt_; }
  /// Eigenvalues of Sigma after clamping, ascending.
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& eigenvectors() const { return eigenvectors_; }
  /// Tr(Sigma^2) = sum of squared eigenvalues.
  double trace_squared() const { return eigenvalues_.squaredNorm(); }

 private:
  Matrix sigma_;
  Matrix sqrt_;
  Vector eigenvalues_;
  Matrix eigenvectors_;
  bool unit_trace_;
};

struct LpNoise {
  PExponent p = PExponent(2.0);
};

struct GaussianNoise {
  CovarianceSpec sigma;
};

using NoiseModel = std::variant<LpNoise, GaussianNoise>;

std::string describe(const NoiseModel& noise);

/// Uniform draw from the unit lp ball in dimension d. Finite p uses the
/// generalized-Gaussian representation: with g_i ~ exp(-|t|^p) i.i.d.
/// and Z standard exponential, g / (sum |g_i|^p + Z)^(1/p) is uniform on
/// the ball. p = inf draws each coordinate uniformly on [-1, 1].
Vector sample_lp_ball(PExponent p, int d, RngStream& rng);

/// sqrt(Sigma) z with z i.i.d. standard normal.
Vector sample_gaussian(const CovarianceSpec& sigma, RngStream& rng);

/// Draw from either noise family; d must match Gaussian dimensions.
Vector sample_noise(const NoiseModel& noise, int d, RngStream& rng);

struct SignalSigma {
  CovarianceSpec sigma;
  double whiteness;  // W(x) = sum over passing coordinates of x_i
};

/// Diagonal covariance proportional to x_i on coordinates with
/// x_i >= threshold, normalized to unit trace. Throws DataError when no
/// coordinate passes (empty support).
SignalSigma signal_dependent_sigma(const Vector& x, double threshold);

// Covariance I/O: CSV is d rows of d comma-separated values; the binary
// format is magic "NCMAT1", two little-endian u64 dims, then row-major
// little-endian IEEE-754 doubles.
void save_covariance_csv(const CovarianceSpec& sigma, const std::string& path);
CovarianceSpec load_covariance_csv(const std::string& path);
void save_covariance_binary(const CovarianceSpec& sigma,
                            const std::string& path);
CovarianceSpec load_covariance_binary(const std::string& path);

}  // namespace noisebound

#endif
