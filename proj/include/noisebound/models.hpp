#ifndef NOISEBOUND_MODELS_HPP
#define NOISEBOUND_MODELS_HPP

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "noisebound/common.hpp"

namespace noisebound {

struct Dataset {
  Matrix X;               // n x d, one point per row
  Eigen::VectorXi labels; // n, values in [0, classes)
  int classes = 2;

  int size() const { return static_cast<int>(X.rows()); }
  int dim() const { return static_cast<int>(X.cols()); }
  void validate() const;
};

/// Label oracle. Binary classifiers expose a single score f and predict
/// 1 iff f > 0; multi-class classifiers predict the argmax score with
/// ties broken toward the smallest class index.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual int dim() const = 0;
  virtual int num_classes() const = 0;
  /// Score vector: length 1 in binary mode, else one entry per class.
  virtual Vector scores(const Vector& x) const = 0;
  int label(const Vector& x) const;

 protected:
  void check_dim(const Vector& x) const;
};

/// Adds a smooth gradient oracle: the Jacobian of the scores wrt x.
class DifferentiableClassifier : public Classifier {
 public:
  /// outputs x d matrix of score gradients.
  virtual Matrix score_jacobian(const Vector& x) const = 0;
  /// Binary mode: gradient of the single score f.
  Vector gradient(const Vector& x) const;
  /// Gradient of f_k - f_l.
  Vector gradient(const Vector& x, int k, int l) const;
};

class LinearModel final : public DifferentiableClassifier {
 public:
  LinearModel(Vector w, double b);

  int dim() const override { return static_cast<int>(w_.size()); }
  int num_classes() const override { return 2; }
  Vector scores(const Vector& x) const override;
  Matrix score_jacobian(const Vector& x) const override;

  const Vector& weights() const { return w_; }
  double bias() const { return b_; }
  double decision_value(const Vector& x) const;

 private:
  Vector w_;
  double b_;
};

class MulticlassLinearModel final : public DifferentiableClassifier {
 public:
  /// W is L x d with one row per class.
  MulticlassLinearModel(Matrix W, Vector b);

  int dim() const override { return static_cast<int>(W_.cols()); }
  int num_classes() const override { return static_cast<int>(W_.rows()); }
  Vector scores(const Vector& x) const override;
  Matrix score_jacobian(const Vector& x) const override;

  const Matrix& weight_matrix() const { return W_; }
  const Vector& biases() const { return b_; }
  Vector class_weight(int k) const { return W_.row(k); }

 private:
  Matrix W_;
  Vector b_;
};

/// Fully connected net with tanh hidden layers and a linear output
/// layer: one unit in binary mode, else one per class.
class MlpModel final : public DifferentiableClassifier {
 public:
  MlpModel(std::vector<Matrix> weights, std::vector<Vector> biases);

  int dim() const override;
  int num_classes() const override;
  Vector scores(const Vector& x) const override;
  Matrix score_jacobian(const Vector& x) const override;

  const std::vector<Matrix>& weights() const { return weights_; }
  const std::vector<Vector>& biases() const { return biases_; }
  std::vector<int> layer_sizes() const;

 private:
  std::vector<Matrix> weights_;  // layer l maps in -> out, stored out x in
  std::vector<Vector> biases_;
};

struct TrainConfig {
  double learning_rate = 0.5;
  int epochs = 500;
  std::uint64_t seed = 0;
  std::vector<int> hidden = {8};  // MLP only
  double weight_decay = 0.0;      // MLP only
  double init_scale = 1.0;        // multiplies the 1/sqrt(fan_in) init
  double input_scale = 1.0;       // folded into the first layer after training
};

struct LogisticFit {
  LinearModel model;
  double train_accuracy;
};

struct MlpFit {
  MlpModel model;
  double train_accuracy;
};

/// Full-batch gradient descent on the logistic loss; binary labels only.
/// Deterministic for a fixed config.
LogisticFit train_logistic(const Dataset& data, const TrainConfig& config);

/// Full-batch gradient descent; logistic loss in binary mode, softmax
/// cross-entropy otherwise. Deterministic for a fixed config.
MlpFit train_mlp(const Dataset& data, const TrainConfig& config);

// Versioned JSON model serialization. Loaders reject unknown kinds.
std::string model_to_json(const Classifier& model);
std::unique_ptr<DifferentiableClassifier> model_from_json(
    const std::string& text);
void save_model(const Classifier& model, const std::string& path);
std::unique_ptr<DifferentiableClassifier> load_model(const std::string& path);

}  // namespace noisebound

#endif
