#ifndef NOISEBOUND_COMMON_HPP
#define NOISEBOUND_COMMON_HPP

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include <Eigen/Core>

namespace noisebound {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Malformed user configuration (CLI exit code 2).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Unreadable or inconsistent input data (CLI exit code 3).
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
// Numeric failure (CLI exit code 4).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Exponent of an lp norm, p in [1, inf]. Infinity is the exact IEEE
/// infinity, never a large finite stand-in.
class PExponent {
 public:
  explicit PExponent(double p) : p_(p) {
    if (!(p >= 1.0)) {
      throw std::invalid_argument("lp exponent must satisfy p >= 1, got " +
                                  std::to_string(p));
    }
  }

  static PExponent infinity() {
    return PExponent(std::numeric_limits<double>::infinity());
  }

  double value() const { return p_; }
  bool is_inf() const { return std::isinf(p_); }
  bool is_one() const { return p_ == 1.0; }

  // Conjugate exponent: 1/p + 1/p' = 1, with 1 <-> inf.
  PExponent conjugate() const {
    if (is_one()) return infinity();
    if (is_inf()) return PExponent(1.0);
    return PExponent(p_ / (p_ - 1.0));
  }

  std::string str() const;

  friend bool operator==(const PExponent& a, const PExponent& b) {
    return a.p_ == b.p_;
  }

 private:
  double p_;
};

// Parses "inf"/"Inf"/"INF" or a decimal number >= 1.
PExponent parse_p_exponent(const std::string& text);

double lp_norm(const Vector& v, PExponent p);

inline double dual_norm(const Vector& v, PExponent p) {
  return lp_norm(v, p.conjugate());
}

}  // namespace noisebound

#endif
