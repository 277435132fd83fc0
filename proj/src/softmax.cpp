#include "geg/softmax.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "geg/random.hpp"

namespace geg {

std::vector<int> Classifier::predict(const Eigen::MatrixXd& features) const {
  const Eigen::MatrixXd scores = predict_scores(features);
  std::vector<int> out(scores.rows());
  for (Eigen::Index i = 0; i < scores.rows(); ++i) {
    int best = 0;
    for (Eigen::Index k = 1; k < scores.cols(); ++k) {
      if (scores(i, k) > scores(i, best)) best = static_cast<int>(k);
    }
    out[static_cast<std::size_t>(i)] = best;
  }
  return out;
}

void SoftmaxConfig::validate() const {
  if (l2 < 0.0) throw DataError("softmax config: l2 must be >= 0");
  if (max_epochs < 1) throw DataError("softmax config: max_epochs must be >= 1");
  if (!(tol > 0.0)) throw DataError("softmax config: tol must be > 0");
  if (!(step > 0.0)) throw DataError("softmax config: step must be > 0");
}

SoftmaxClassifier::SoftmaxClassifier(Eigen::MatrixXd coefficients, Eigen::VectorXd intercepts,
                                     Eigen::VectorXd feature_mean, Eigen::VectorXd feature_scale)
    : coefficients_(std::move(coefficients)),
      intercepts_(std::move(intercepts)),
      feature_mean_(std::move(feature_mean)),
      feature_scale_(std::move(feature_scale)) {}

namespace {

// Row-wise softmax with max-shift for overflow safety.
Eigen::MatrixXd row_softmax(Eigen::MatrixXd logits) {
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    logits.row(i) = (logits.row(i).array() - shift).exp();
    logits.row(i) /= logits.row(i).sum();
  }
  return logits;
}

}  // namespace

Eigen::MatrixXd SoftmaxClassifier::predict_scores(const Eigen::MatrixXd& features) const {
  if (features.cols() != coefficients_.rows()) {
    throw DataError("feature dimension " + std::to_string(features.cols()) +
                    " does not match the fitted model (" +
                    std::to_string(coefficients_.rows()) + ")");
  }
  Eigen::MatrixXd z = (features.rowwise() - feature_mean_.transpose()).array().rowwise() /
                      feature_scale_.transpose().array();
  Eigen::MatrixXd logits = z * coefficients_;
  logits.rowwise() += intercepts_.transpose();
  return row_softmax(std::move(logits));
}

std::uint64_t SoftmaxClassifier::fingerprint() const {
  // FNV-1a over the raw parameter bytes; bit-identical fits collide on purpose.
  std::uint64_t h = 1469598103934665603ull;
  auto mix = [&h](const double* data, Eigen::Index count) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(data);
    for (Eigen::Index i = 0; i < count * static_cast<Eigen::Index>(sizeof(double)); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ull;
    }
  };
  mix(coefficients_.data(), coefficients_.size());
  mix(intercepts_.data(), intercepts_.size());
  mix(feature_mean_.data(), feature_mean_.size());
  mix(feature_scale_.data(), feature_scale_.size());
  return h;
}

nlohmann::json SoftmaxClassifier::to_json() const {
  nlohmann::json j;
  j["type"] = "softmax";
  j["num_classes"] = num_classes();
  auto matrix_rows = [](const Eigen::MatrixXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["coefficients"] = matrix_rows(coefficients_);
  j["intercepts"] = std::vector<double>(intercepts_.data(), intercepts_.data() + intercepts_.size());
  j["feature_mean"] =
      std::vector<double>(feature_mean_.data(), feature_mean_.data() + feature_mean_.size());
  j["feature_scale"] =
      std::vector<double>(feature_scale_.data(), feature_scale_.data() + feature_scale_.size());
  return j;
}

SoftmaxClassifier SoftmaxClassifier::from_json(const nlohmann::json& j) {
  const auto& coeff = j.at("coefficients");
  const Eigen::Index d = static_cast<Eigen::Index>(coeff.size());
  const Eigen::Index k = d > 0 ? static_cast<Eigen::Index>(coeff[0].size())
                               : static_cast<Eigen::Index>(j.at("intercepts").size());
  Eigen::MatrixXd coefficients(d, k);
  for (Eigen::Index i = 0; i < d; ++i) {
    for (Eigen::Index c = 0; c < k; ++c) coefficients(i, c) = coeff[i][c].get<double>();
  }
  auto vec = [&j](const char* key) {
    const auto values = j.at(key).get<std::vector<double>>();
    return Eigen::Map<const Eigen::VectorXd>(values.data(),
                                             static_cast<Eigen::Index>(values.size()))
        .eval();
  };
  return SoftmaxClassifier(std::move(coefficients), vec("intercepts"), vec("feature_mean"),
                           vec("feature_scale"));
}

double softmax_loss(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                    const Eigen::VectorXd& weights, const Eigen::MatrixXd& coefficients,
                    const Eigen::VectorXd& intercepts, double l2,
                    Eigen::MatrixXd* grad_coefficients, Eigen::VectorXd* grad_intercepts) {
  const Eigen::Index n = features.rows();
  Eigen::MatrixXd logits = features * coefficients;
  logits.rowwise() += intercepts.transpose();

  double loss = 0.0;
  Eigen::MatrixXd residual(n, coefficients.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const double shift = logits.row(i).maxCoeff();
    const Eigen::ArrayXd ex = (logits.row(i).transpose().array() - shift).exp();
    const double total = ex.sum();
    const int y = labels[static_cast<std::size_t>(i)];
    loss += weights(i) * (std::log(total) + shift - logits(i, y));
    residual.row(i) = weights(i) * (ex / total).matrix().transpose();
    residual(i, y) -= weights(i);
  }
  loss += l2 * coefficients.squaredNorm();

  if (grad_coefficients) *grad_coefficients = features.transpose() * residual + 2.0 * l2 * coefficients;
  if (grad_intercepts) *grad_intercepts = residual.colwise().sum();
  return loss;
}

SoftmaxClassifier fit_softmax(const Eigen::MatrixXd& features, const std::vector<int>& labels,
                              const Eigen::VectorXd& weights, const SoftmaxConfig& config,
                              int num_classes) {
  config.validate();
  const Eigen::Index n = features.rows();
  const Eigen::Index d = features.cols();
  if (n == 0) throw DataError("fit_softmax: empty training set");
  if (static_cast<Eigen::Index>(labels.size()) != n || weights.size() != n) {
    throw DataError("fit_softmax: features, labels and weights must have equal length");
  }
  if (!features.allFinite() || !weights.allFinite()) {
    throw DataError("fit_softmax: non-finite inputs");
  }
  if ((weights.array() < 0.0).any()) throw DataError("fit_softmax: negative weights");
  const double weight_sum = weights.sum();
  if (!(weight_sum > 0.0)) throw DataError("fit_softmax: all weights are zero");

  int max_label = 0;
  for (int y : labels) {
    if (y < 0) throw DataError("fit_softmax: negative label");
    max_label = std::max(max_label, y);
  }
  const int k = num_classes > 0 ? num_classes : max_label + 1;
  if (max_label >= k) throw DataError("fit_softmax: label id exceeds num_classes");

  const Eigen::VectorXd w_norm = weights / weight_sum;

  // Weighted standardization; near-constant columns pass through unscaled.
  Eigen::VectorXd mean = features.transpose() * w_norm;
  Eigen::VectorXd scale(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const double var = ((features.col(j).array() - mean(j)).square() * w_norm.array()).sum();
    scale(j) = var > 1e-24 ? std::sqrt(var) : 1.0;
  }
  const Eigen::MatrixXd z =
      (features.rowwise() - mean.transpose()).array().rowwise() / scale.transpose().array();

  int distinct = 0;
  {
    std::vector<bool> present(static_cast<std::size_t>(k), false);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (weights(i) > 0.0 && !present[labels[static_cast<std::size_t>(i)]]) {
        present[labels[static_cast<std::size_t>(i)]] = true;
        ++distinct;
      }
    }
    if (distinct == 1) {
      // Degenerate cost-sensitive problems collapse to one target class;
      // return the constant classifier for it instead of iterating.
      int only = 0;
      for (std::size_t c = 0; c < present.size(); ++c) {
        if (present[c]) only = static_cast<int>(c);
      }
      Eigen::VectorXd intercepts = Eigen::VectorXd::Zero(k);
      intercepts(only) = 30.0;
      return SoftmaxClassifier(Eigen::MatrixXd::Zero(d, k), std::move(intercepts),
                               std::move(mean), std::move(scale));
    }
  }

  std::mt19937_64 gen(config.seed);
  Eigen::MatrixXd coeff(d, k);
  for (Eigen::Index j = 0; j < d; ++j) {
    for (int c = 0; c < k; ++c) coeff(j, c) = 0.01 * rng::normal(gen);
  }
  Eigen::VectorXd intercepts = Eigen::VectorXd::Zero(k);

  Eigen::MatrixXd grad_coeff;
  Eigen::VectorXd grad_intercepts;
  double loss = softmax_loss(z, labels, w_norm, coeff, intercepts, config.l2, &grad_coeff,
                             &grad_intercepts);
  double step = config.step;
  for (int epoch = 0; epoch < config.max_epochs; ++epoch) {
    const Eigen::MatrixXd next_coeff = coeff - step * grad_coeff;
    const Eigen::VectorXd next_intercepts = intercepts - step * grad_intercepts;
    Eigen::MatrixXd next_grad_coeff;
    Eigen::VectorXd next_grad_intercepts;
    const double next_loss = softmax_loss(z, labels, w_norm, next_coeff, next_intercepts,
                                          config.l2, &next_grad_coeff, &next_grad_intercepts);
    if (next_loss > loss) {
      // Overshoot: halve the step and retry from the same point.
      step *= 0.5;
      if (step < 1e-12) break;
      continue;
    }
    const double decrease = loss - next_loss;
    coeff = next_coeff;
    intercepts = next_intercepts;
    grad_coeff = std::move(next_grad_coeff);
    grad_intercepts = std::move(next_grad_intercepts);
    loss = next_loss;
    // A plateau only counts as converged once the iterate is stationary too;
    // the loss flattens out quadratically before the parameters settle.
    if (decrease < config.tol &&
        std::max(grad_coeff.cwiseAbs().maxCoeff(),
                 grad_intercepts.cwiseAbs().maxCoeff()) < std::sqrt(config.tol)) {
      break;
    }
  }

  return SoftmaxClassifier(std::move(coeff), std::move(intercepts), std::move(mean),
                           std::move(scale));
}

Oracle make_softmax_oracle(const SoftmaxConfig& config, int num_classes) {
  config.validate();
  return [config, num_classes](const Eigen::MatrixXd& features, const std::vector<int>& labels,
                               const Eigen::VectorXd& weights) {
    return std::make_shared<const SoftmaxClassifier>(
        fit_softmax(features, labels, weights, config, num_classes));
  };
}

}  // namespace geg
