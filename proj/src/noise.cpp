#include "noisebound/noise.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

#include <Eigen/Dense>

namespace noisebound {

CovarianceSpec::CovarianceSpec(Matrix sigma, bool unit_trace)
    : sigma_(std::move(sigma)), unit_trace_(unit_trace) {
  if (sigma_.rows() != sigma_.cols() || sigma_.rows() < 1) {
    throw std::invalid_argument("covariance must be square and non-empty");
  }
  const double scale = sigma_.cwiseAbs().maxCoeff();
  const double asym = (sigma_ - sigma_.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-12 * std::max(scale, 1e-300)) {
    throw std::invalid_argument("covariance is not symmetric");
  }
  if (unit_trace_ && std::abs(sigma_.trace() - 1.0) > 1e-9) {
    throw std::invalid_argument("covariance flagged unit-trace has Tr != 1");
  }

  Eigen::SelfAdjointEigenSolver<Matrix> es(
      (sigma_ + sigma_.transpose()) * 0.5);
  if (es.info() != Eigen::Success) {
    throw NumericError("covariance eigendecomposition failed");
  }
  eigenvalues_ = es.eigenvalues();
  eigenvectors_ = es.eigenvectors();
  const double lmax = std::max(eigenvalues_.maxCoeff(), 0.0);
  const double tol = 1e-12 * lmax;
  for (Eigen::Index i = 0; i < eigenvalues_.size(); ++i) {
    if (eigenvalues_[i] < -tol) {
      throw std::invalid_argument("covariance has a negative eigenvalue");
    }
    if (eigenvalues_[i] < 0.0) eigenvalues_[i] = 0.0;
  }
  sqrt_ = eigenvectors_ * eigenvalues_.cwiseSqrt().asDiagonal() *
          eigenvectors_.transpose();
}

CovarianceSpec CovarianceSpec::white(int d) {
  if (d < 1) throw std::invalid_argument("white covariance needs d >= 1");
  return CovarianceSpec(Matrix::Identity(d, d) / d, true);
}

std::string describe(const NoiseModel& noise) {
  if (const auto* lp = std::get_if<LpNoise>(&noise)) {
    return "lp(" + lp->p.str() + ")";
  }
  return "gaussian(d=" + std::to_string(std::get<GaussianNoise>(noise).sigma.dim()) + ")";
}

Vector sample_lp_ball(PExponent p, int d, RngStream& rng) {
  if (d < 1) throw std::invalid_argument("sample_lp_ball: d must be >= 1");
  Vector v(d);
  if (p.is_inf()) {
    for (int i = 0; i < d; ++i) v[i] = rng.uniform(-1.0, 1.0);
    return v;
  }
  const double pv = p.value();
  double sum = 0.0;
  for (int i = 0; i < d; ++i) {
    v[i] = rng.generalized_gaussian(pv);
    sum += std::pow(std::abs(v[i]), pv);
  }
  const double z = rng.exponential();
  const double scale = std::pow(sum + z, 1.0 / pv);
  return v / scale;
}

Vector sample_gaussian(const CovarianceSpec& sigma, RngStream& rng) {
  Vector z(sigma.dim());
  for (int i = 0; i < sigma.dim(); ++i) z[i] = rng.normal();
  return sigma.sqrt_matrix() * z;
}

Vector sample_noise(const NoiseModel& noise, int d, RngStream& rng) {
  if (const auto* lp = std::get_if<LpNoise>(&noise)) {
    return sample_lp_ball(lp->p, d, rng);
  }
  const auto& g = std::get<GaussianNoise>(noise);
  if (g.sigma.dim() != d) {
    throw std::invalid_argument("gaussian noise dimension mismatch");
  }
  return sample_gaussian(g.sigma, rng);
}

SignalSigma signal_dependent_sigma(const Vector& x, double threshold) {
  double w = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] >= threshold) {
      if (x[i] < 0.0) {
        throw DataError("signal_dependent_sigma: negative intensity passes threshold");
      }
      w += x[i];
    }
  }
  if (w <= 0.0) {
    throw DataError("signal_dependent_sigma: no coordinate passes the threshold");
  }
  Matrix sigma = Matrix::Zero(x.size(), x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] >= threshold) sigma(i, i) = x[i] / w;
  }
  return SignalSigma{CovarianceSpec(std::move(sigma), true), w};
}

void save_covariance_csv(const CovarianceSpec& sigma, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  const Matrix& m = sigma.matrix();
  char buf[64];
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", m(i, j));
      out << buf << (j + 1 == m.cols() ? "" : ",");
    }
    out << "\n";
  }
}

CovarianceSpec load_covariance_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> row;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      try {
        row.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw DataError(path + ": bad number at line " +
                        std::to_string(lineno));
      }
    }
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw DataError(path + ": ragged row at line " + std::to_string(lineno));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": empty covariance file");
  if (rows.size() != rows.front().size()) {
    throw DataError(path + ": covariance matrix is not square");
  }
  Matrix m(rows.size(), rows.size());
  for (size_t i = 0; i < rows.size(); ++i) {
    for (size_t j = 0; j < rows.size(); ++j) m(i, j) = rows[i][j];
  }
  return CovarianceSpec(std::move(m));
}

namespace {

constexpr char kMagic[6] = {'N', 'C', 'M', 'A', 'T', '1'};

void put_u64_le(std::ostream& out, std::uint64_t v) {
  char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 8);
}

std::uint64_t get_u64_le(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

void put_f64_le(std::ostream& out, double x) {
  std::uint64_t v;
  std::memcpy(&v, &x, 8);
  put_u64_le(out, v);
}

double get_f64_le(std::istream& in) {
  std::uint64_t v = get_u64_le(in);
  double x;
  std::memcpy(&x, &v, 8);
  return x;
}

}  // namespace

void save_covariance_binary(const CovarianceSpec& sigma,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kMagic, sizeof(kMagic));
  const Matrix& m = sigma.matrix();
  put_u64_le(out, static_cast<std::uint64_t>(m.rows()));
  put_u64_le(out, static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f64_le(out, m(i, j));
  }
}

CovarianceSpec load_covariance_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open: " + path);
  char magic[6];
  in.read(magic, 6);
  if (!in || std::memcmp(magic, kMagic, 6) != 0) {
    throw DataError(path + ": bad covariance magic");
  }
  std::uint64_t rows = get_u64_le(in);
  std::uint64_t cols = get_u64_le(in);
  if (!in || rows != cols || rows == 0 || rows > (1ULL << 20)) {
    throw DataError(path + ": bad covariance dimensions");
  }
  Matrix m(rows, cols);
  for (std::uint64_t i = 0; i < rows; ++i) {
    for (std::uint64_t j = 0; j < cols; ++j) m(i, j) = get_f64_le(in);
  }
  if (!in) throw DataError(path + ": truncated covariance file");
  return CovarianceSpec(std::move(m));
}

}  // namespace noisebound
