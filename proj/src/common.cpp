#include "noisebound/common.hpp"

#include <algorithm>
#include <cstdio>

namespace noisebound {

std::string PExponent::str() const {
  if (is_inf()) return "inf";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", p_);
  return buf;
}

PExponent parse_p_exponent(const std::string& text) {
  std::string t = text;
  std::transform(t.begin(), t.end(), t.begin(), ::tolower);
  if (t == "inf" || t == "infinity") return PExponent::infinity();
  try {
    size_t pos = 0;
    double v = std::stod(t, &pos);
    if (pos != t.size()) throw std::invalid_argument(text);
    return PExponent(v);
  } catch (const std::invalid_argument&) {
    throw ConfigError("cannot parse lp exponent: '" + text + "'");
  }
}

double lp_norm(const Vector& v, PExponent p) {
  if (p.is_inf()) return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  if (p.is_one()) return v.cwiseAbs().sum();
  if (p.value() == 2.0) return v.norm();
  // scale by the largest coordinate so large exponents cannot overflow
  const double m = v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff();
  if (m == 0.0) return 0.0;
  double s = 0.0;
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    s += std::pow(std::abs(v[i]) / m, p.value());
  }
  return m * std::pow(s, 1.0 / p.value());
}

}  // namespace noisebound
