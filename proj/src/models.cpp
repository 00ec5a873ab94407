#include "noisebound/models.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "noisebound/rng.hpp"

namespace noisebound {

using nlohmann::json;

void Dataset::validate() const {
  if (X.rows() == 0) throw DataError("dataset is empty");
  if (labels.size() != X.rows()) {
    throw DataError("dataset has " + std::to_string(X.rows()) + " points but " +
                    std::to_string(labels.size()) + " labels");
  }
  if (classes < 2) throw DataError("dataset needs at least 2 classes");
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw DataError("label out of range at point " + std::to_string(i));
    }
  }
  if (!X.allFinite()) throw DataError("dataset contains non-finite values");
}

void Classifier::check_dim(const Vector& x) const {
  if (static_cast<int>(x.size()) != dim()) {
    throw std::invalid_argument("point has dimension " +
                                std::to_string(x.size()) + ", model expects " +
                                std::to_string(dim()));
  }
}

int Classifier::label(const Vector& x) const {
  Vector s = scores(x);
  if (s.size() == 1) return s[0] > 0.0 ? 1 : 0;
  int best = 0;
  for (Eigen::Index k = 1; k < s.size(); ++k) {
    if (s[k] > s[best]) best = static_cast<int>(k);
  }
  return best;
}

Vector DifferentiableClassifier::gradient(const Vector& x) const {
  Matrix j = score_jacobian(x);
  if (j.rows() != 1) {
    throw std::invalid_argument("binary gradient requested from a multi-class model");
  }
  return j.row(0);
}

Vector DifferentiableClassifier::gradient(const Vector& x, int k, int l) const {
  Matrix j = score_jacobian(x);
  if (k < 0 || l < 0 || k >= j.rows() || l >= j.rows()) {
    throw std::invalid_argument("class pair out of range");
  }
  return j.row(k) - j.row(l);
}

LinearModel::LinearModel(Vector w, double b) : w_(std::move(w)), b_(b) {
  if (w_.size() == 0 || w_.norm() == 0.0) {
    throw std::invalid_argument("linear model needs a nonzero weight vector");
  }
}

Vector LinearModel::scores(const Vector& x) const {
  check_dim(x);
  Vector s(1);
  s[0] = w_.dot(x) + b_;
  return s;
}

double LinearModel::decision_value(const Vector& x) const {
  check_dim(x);
  return w_.dot(x) + b_;
}

Matrix LinearModel::score_jacobian(const Vector& x) const {
  check_dim(x);
  return w_.transpose();
}

MulticlassLinearModel::MulticlassLinearModel(Matrix W, Vector b)
    : W_(std::move(W)), b_(std::move(b)) {
  if (W_.rows() < 2) throw std::invalid_argument("need at least 2 classes");
  if (b_.size() != W_.rows()) {
    throw std::invalid_argument("bias count does not match class count");
  }
  for (Eigen::Index k = 0; k < W_.rows(); ++k) {
    for (Eigen::Index l = k + 1; l < W_.rows(); ++l) {
      if ((W_.row(k) - W_.row(l)).norm() == 0.0) {
        throw std::invalid_argument("classes " + std::to_string(k) + " and " +
                                    std::to_string(l) +
                                    " have identical weights");
      }
    }
  }
}

Vector MulticlassLinearModel::scores(const Vector& x) const {
  check_dim(x);
  return W_ * x + b_;
}

Matrix MulticlassLinearModel::score_jacobian(const Vector& x) const {
  check_dim(x);
  return W_;
}

MlpModel::MlpModel(std::vector<Matrix> weights, std::vector<Vector> biases)
    : weights_(std::move(weights)), biases_(std::move(biases)) {
  if (weights_.empty() || weights_.size() != biases_.size()) {
    throw std::invalid_argument("mlp needs matching weight/bias layers");
  }
  for (size_t l = 0; l < weights_.size(); ++l) {
    if (biases_[l].size() != weights_[l].rows()) {
      throw std::invalid_argument("mlp bias size mismatch at layer " +
                                  std::to_string(l));
    }
    if (l + 1 < weights_.size() &&
        weights_[l + 1].cols() != weights_[l].rows()) {
      throw std::invalid_argument("mlp layer size mismatch at layer " +
                                  std::to_string(l + 1));
    }
  }
}

int MlpModel::dim() const { return static_cast<int>(weights_.front().cols()); }

int MlpModel::num_classes() const {
  int out = static_cast<int>(weights_.back().rows());
  return out == 1 ? 2 : out;
}

std::vector<int> MlpModel::layer_sizes() const {
  std::vector<int> sizes;
  sizes.push_back(dim());
  for (const auto& w : weights_) sizes.push_back(static_cast<int>(w.rows()));
  return sizes;
}

Vector MlpModel::scores(const Vector& x) const {
  check_dim(x);
  Vector a = x;
  for (size_t l = 0; l + 1 < weights_.size(); ++l) {
    a = (weights_[l] * a + biases_[l]).array().tanh();
  }
  return weights_.back() * a + biases_.back();
}

Matrix MlpModel::score_jacobian(const Vector& x) const {
  check_dim(x);
  // Forward pass keeping hidden activations, then accumulate the chain
  // rule from the output side.
  std::vector<Vector> acts;
  Vector a = x;
  for (size_t l = 0; l + 1 < weights_.size(); ++l) {
    a = (weights_[l] * a + biases_[l]).array().tanh();
    acts.push_back(a);
  }
  Matrix j = weights_.back();
  for (size_t l = weights_.size() - 1; l-- > 0;) {
    const Vector deriv = 1.0 - acts[l].array().square();
    j = (j * deriv.asDiagonal()) * weights_[l];
  }
  return j;
}

namespace {

double logistic(double t) { return 1.0 / (1.0 + std::exp(-t)); }

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, double scale,
                     RngStream& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

double accuracy(const Classifier& model, const Dataset& data) {
  int correct = 0;
  for (int i = 0; i < data.size(); ++i) {
    if (model.label(data.X.row(i)) == data.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / data.size();
}

}  // namespace

LogisticFit train_logistic(const Dataset& data, const TrainConfig& config) {
  data.validate();
  if (data.classes != 2) {
    throw std::invalid_argument("train_logistic needs binary labels");
  }
  const int n = data.size();
  const int d = data.dim();
  RngStream rng(config.seed, 0);
  Vector w = random_matrix(d, 1, 0.01 * config.init_scale, rng).col(0);
  double b = 0.0;
  Vector y(n);
  for (int i = 0; i < n; ++i) y[i] = data.labels[i];
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    Vector f = data.X * w + Vector::Constant(n, b);
    Vector g = f.unaryExpr([](double t) { return logistic(t); }) - y;
    g /= n;
    w -= config.learning_rate * (data.X.transpose() * g);
    b -= config.learning_rate * g.sum();
  }
  LinearModel model(std::move(w), b);
  double acc = accuracy(model, data);
  return LogisticFit{std::move(model), acc};
}

MlpFit train_mlp(const Dataset& data, const TrainConfig& config) {
  data.validate();
  const int n = data.size();
  const int d = data.dim();
  const int out = data.classes == 2 ? 1 : data.classes;
  std::vector<int> sizes;
  sizes.push_back(d);
  for (int h : config.hidden) {
    if (h < 1) throw std::invalid_argument("hidden width must be positive");
    sizes.push_back(h);
  }
  sizes.push_back(out);

  RngStream rng(config.seed, 0);
  std::vector<Matrix> W;
  std::vector<Vector> bias;
  for (size_t l = 0; l + 1 < sizes.size(); ++l) {
    double scale = config.init_scale / std::sqrt(static_cast<double>(sizes[l]));
    W.push_back(random_matrix(sizes[l + 1], sizes[l], scale, rng));
    bias.push_back(Vector::Zero(sizes[l + 1]));
  }

  const Matrix X = data.X * config.input_scale;
  const int layers = static_cast<int>(W.size());
  std::vector<Matrix> act(layers);  // post-tanh activations, n x width

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // forward
    Matrix a = X;
    for (int l = 0; l + 1 < layers; ++l) {
      act[l] = ((a * W[l].transpose()).rowwise() + bias[l].transpose())
                   .array()
                   .tanh();
      a = act[l];
    }
    Matrix f = (a * W[layers - 1].transpose()).rowwise() +
               bias[layers - 1].transpose();

    // output deltas: dLoss/df, averaged over the batch
    Matrix delta(n, out);
    if (out == 1) {
      for (int i = 0; i < n; ++i) {
        delta(i, 0) = (logistic(f(i, 0)) - data.labels[i]) / n;
      }
    } else {
      for (int i = 0; i < n; ++i) {
        double m = f.row(i).maxCoeff();
        Eigen::RowVectorXd e = (f.row(i).array() - m).exp();
        e /= e.sum();
        delta.row(i) = e;
        delta(i, data.labels[i]) -= 1.0;
        delta.row(i) /= n;
      }
    }

    // backward
    for (int l = layers - 1; l >= 0; --l) {
      const Matrix& input = (l == 0) ? X : act[l - 1];
      Matrix gw = delta.transpose() * input + config.weight_decay * W[l];
      Vector gb = delta.colwise().sum();
      if (l > 0) {
        Matrix back = delta * W[l];
        delta = back.array() * (1.0 - act[l - 1].array().square());
      }
      W[l] -= config.learning_rate * gw;
      bias[l] -= config.learning_rate * gb;
    }
  }

  // Fold the input scaling into the first layer so the returned model
  // operates on raw coordinates.
  W[0] *= config.input_scale;
  MlpModel model(std::move(W), std::move(bias));
  double acc = accuracy(model, data);
  return MlpFit{std::move(model), acc};
}

namespace {

json vector_to_json(const Vector& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

json matrix_to_json_rowmajor(const Matrix& m) {
  json a = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) a.push_back(m(i, j));
  }
  return a;
}

Vector vector_from_json(const json& a) {
  Vector v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[i] = a[i].get<double>();
  return v;
}

}  // namespace

std::string model_to_json(const Classifier& model) {
  json doc;
  doc["version"] = 1;
  if (const auto* lin = dynamic_cast<const LinearModel*>(&model)) {
    doc["kind"] = "linear";
    doc["d"] = lin->dim();
    doc["L"] = 2;
    doc["weights"] = vector_to_json(lin->weights());
    doc["biases"] = json::array({lin->bias()});
  } else if (const auto* mc =
                 dynamic_cast<const MulticlassLinearModel*>(&model)) {
    doc["kind"] = "multiclass_linear";
    doc["d"] = mc->dim();
    doc["L"] = mc->num_classes();
    doc["weights"] = matrix_to_json_rowmajor(mc->weight_matrix());
    doc["biases"] = vector_to_json(mc->biases());
  } else if (const auto* mlp = dynamic_cast<const MlpModel*>(&model)) {
    doc["kind"] = "mlp";
    doc["d"] = mlp->dim();
    doc["L"] = mlp->num_classes();
    doc["activation"] = "tanh";
    doc["layers"] = mlp->layer_sizes();
    json w = json::array();
    json b = json::array();
    for (const auto& m : mlp->weights()) {
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) w.push_back(m(i, j));
      }
    }
    for (const auto& v : mlp->biases()) {
      for (Eigen::Index i = 0; i < v.size(); ++i) b.push_back(v[i]);
    }
    doc["weights"] = w;
    doc["biases"] = b;
  } else {
    throw std::invalid_argument("cannot serialize this classifier kind");
  }
  return doc.dump(2);
}

std::unique_ptr<DifferentiableClassifier> model_from_json(
    const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw DataError(std::string("model JSON parse error: ") + e.what());
  }
  try {
    if (doc.at("version").get<int>() != 1) {
      throw DataError("unsupported model version");
    }
    const std::string kind = doc.at("kind").get<std::string>();
    const int d = doc.at("d").get<int>();
    if (kind == "linear") {
      Vector w = vector_from_json(doc.at("weights"));
      if (static_cast<int>(w.size()) != d) {
        throw DataError("linear model weight length does not match d");
      }
      return std::make_unique<LinearModel>(std::move(w),
                                           doc.at("biases").at(0).get<double>());
    }
    if (kind == "multiclass_linear") {
      const int L = doc.at("L").get<int>();
      Vector flat = vector_from_json(doc.at("weights"));
      if (static_cast<int>(flat.size()) != L * d) {
        throw DataError("multiclass weight length does not match L*d");
      }
      Matrix W(L, d);
      for (int k = 0; k < L; ++k) {
        for (int j = 0; j < d; ++j) W(k, j) = flat[k * d + j];
      }
      return std::make_unique<MulticlassLinearModel>(
          std::move(W), vector_from_json(doc.at("biases")));
    }
    if (kind == "mlp") {
      if (doc.at("activation").get<std::string>() != "tanh") {
        throw DataError("unknown mlp activation");
      }
      std::vector<int> sizes = doc.at("layers").get<std::vector<int>>();
      if (sizes.size() < 2 || sizes.front() != d) {
        throw DataError("bad mlp layer sizes");
      }
      Vector w = vector_from_json(doc.at("weights"));
      Vector b = vector_from_json(doc.at("biases"));
      std::vector<Matrix> weights;
      std::vector<Vector> biases;
      Eigen::Index wpos = 0, bpos = 0;
      for (size_t l = 0; l + 1 < sizes.size(); ++l) {
        const int rows = sizes[l + 1], cols = sizes[l];
        if (wpos + rows * cols > w.size() || bpos + rows > b.size()) {
          throw DataError("mlp weight payload too short");
        }
        Matrix m(rows, cols);
        for (int i = 0; i < rows; ++i) {
          for (int j = 0; j < cols; ++j) m(i, j) = w[wpos + i * cols + j];
        }
        weights.push_back(std::move(m));
        biases.push_back(b.segment(bpos, rows));
        wpos += rows * cols;
        bpos += rows;
      }
      if (wpos != w.size() || bpos != b.size()) {
        throw DataError("mlp weight payload has trailing values");
      }
      return std::make_unique<MlpModel>(std::move(weights), std::move(biases));
    }
    throw DataError("unknown model kind: " + kind);
  } catch (const json::exception& e) {
    throw DataError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const Classifier& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot open for writing: " + path);
  out << model_to_json(model) << "\n";
}

std::unique_ptr<DifferentiableClassifier> load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return model_from_json(ss.str());
}

}  // namespace noisebound
