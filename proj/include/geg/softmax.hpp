#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "geg/errors.hpp"

#include <json.hpp>

namespace geg {

/// Fitted model interface. Implementations must be immutable after fit and
/// deterministic: predict is the row-wise argmax of predict_scores with
/// lowest-class-id tie-break.
class Classifier {
 public:
  virtual ~Classifier() = default;
  virtual int num_classes() const = 0;
  virtual Eigen::MatrixXd predict_scores(const Eigen::MatrixXd& features) const = 0;
  virtual std::vector<int> predict(const Eigen::MatrixXd& features) const;
  /// Content hash of the fitted parameters, used to deduplicate mixture members.
  virtual std::uint64_t fingerprint() const = 0;
  virtual nlohmann::json to_json() const = 0;
};

struct SoftmaxConfig {
  double l2 = 1e-4;      // ridge strength on coefficients (intercepts excluded)
  int max_epochs = 500;
  double tol = 1e-7;     // stop when the loss decrease falls below this
  double step = 0.5;     // gradient step on standardized features
  std::uint64_t seed = 0;

  void validate() const;
};

/// Multinomial logistic regression fit by full-batch gradient descent on the
/// mean-normalized weighted cross-entropy. Features are standardized with
/// weighted statistics so that scaling all weights, or duplicating a row
/// instead of doubling its weight, leaves the fit unchanged.
class SoftmaxClassifier : public Classifier {
 public:
  SoftmaxClassifier() = default;
  SoftmaxClassifier(Eigen::MatrixXd coefficients, Eigen::VectorXd intercepts,
                    Eigen::VectorXd feature_mean, Eigen::VectorXd feature_scale);

  int num_classes() const override { return static_cast<int>(intercepts_.size()); }
  Eigen::MatrixXd predict_scores(const Eigen::MatrixXd& features) const override;
  std::uint64_t fingerprint() const override;
  nlohmann::json to_json() const override;
  static SoftmaxClassifier from_json(const nlohmann::json& j);

  const Eigen::MatrixXd& coefficients() const { return coefficients_; }
  const Eigen::VectorXd& intercepts() const { return intercepts_; }

 private:
  Eigen::MatrixXd coefficients_;  // d x K
  Eigen::VectorXd intercepts_;    // K
  Eigen::VectorXd feature_mean_;  // d
  Eigen::VectorXd feature_scale_; // d
};

/// Loss and gradient of the objective minimized by fit_softmax, evaluated on
/// already-standardized features. weights must be normalized to sum 1.
/// Exposed so the gradient can be checked against finite differences.
double softmax_loss(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                    const Eigen::VectorXd& weights, const Eigen::MatrixXd& coefficients,
                    const Eigen::VectorXd& intercepts, double l2,
                    Eigen::MatrixXd* grad_coefficients = nullptr,
                    Eigen::VectorXd* grad_intercepts = nullptr);

/// Trains a softmax model on (features, labels) with per-sample weights.
/// num_classes = 0 infers the class count from the labels; pass it
/// explicitly when some classes may be absent from the training labels.
SoftmaxClassifier fit_softmax(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                              const Eigen::VectorXd& weights, const SoftmaxConfig& config,
                              int num_classes = 0);

/// Cost-sensitive learner contract used by the solver: any callable mapping
/// (features, labels, weights) to a fitted Classifier can be plugged in.
using Oracle = std::function<std::shared_ptr<const Classifier>(
    const Eigen::MatrixXd&, const std::vector<int>&, const Eigen::VectorXd&)>;

Oracle make_softmax_oracle(const SoftmaxConfig& config, int num_classes);

}  // namespace geg
