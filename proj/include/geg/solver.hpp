#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "geg/constraints.hpp"
#include "geg/dataset.hpp"
#include "geg/softmax.hpp"

namespace geg {

enum class PredictionMode { ExpectedVote, Sampled };

/// Solver parameters. eta and delta default to the exponentiated-gradient
/// literature values; with eta that small the dual barely moves in a short
/// run, so experiments that should visibly enforce constraints want a larger
/// eta (see README).
struct GegConfig {
  double eta = 1e-5;    // dual learning rate
  double delta = 0.05;  // budget parameter; B = 1/delta
  double nu = 1e-3;     // duality-gap stopping threshold
  int max_iter = 50;
  int t_min = 5;

  ConstraintKind constraint = ConstraintKind::DemographicParity;
  double eps_default = 0.0;
  std::vector<int> conditioning_labels;  // empty -> {positive label}

  PredictionMode prediction_mode = PredictionMode::ExpectedVote;
  std::uint64_t sample_seed = 0;

  SoftmaxConfig oracle;

  double budget() const { return 1.0 / delta; }
  void validate() const;
};

/// Auditor state: theta parameterizes the dual variables through a softmax
/// onto the l1 ball of radius B, with one implicit slack coordinate.
struct DualState {
  Eigen::VectorXd theta;
  double budget = 20.0;
};

/// lambda_i = B * exp(theta_i) / (1 + sum_k exp(theta_k)), computed with a
/// max-shift applied to every term including the slack's exp(0). Guarantees
/// lambda_i >= 0 and sum lambda_i <= B.
Eigen::VectorXd dual_weights(const DualState& state);

/// The cost-sensitive problem handed to the oracle for one iteration.
struct CostSensitiveProblem {
  std::vector<int> adjusted_labels;  // y_p where the signed weight is positive
  Eigen::VectorXd weights;           // normalized to sum N (all-ones if degenerate)
  Eigen::VectorXd signed_weights;    // pre-normalization, sign decides the label
};

/// Signed weight of row j:  w_j = e_j - sum_i lambda_i * signal(i, j), where
/// e_j is +1 for positive-label rows and -1 otherwise. The fairness term
/// enters with a minus sign so that constraints whose dual mass grows pull
/// predictions toward the under-predicted event; with lambda = 0 the
/// adjusted labels equal the true labels and the fit reduces to plain ERM.
CostSensitiveProblem build_cost_sensitive_problem(const Eigen::VectorXd& lambda,
                                                  const Dataset& dataset,
                                                  const Eigen::MatrixXd& fair_signal);

/// L = risk + sum_i lambda_i * (gamma_i - eps_i).
double lagrangian(double risk, const Eigen::VectorXd& violations, const Eigen::VectorXd& lambda,
                  const Eigen::VectorXd& eps);

/// Additive exponentiated-gradient step: theta_i += eta * (gamma_i - eps_i).
DualState dual_update(const DualState& state, const Eigen::VectorXd& violations,
                      const Eigen::VectorXd& eps, double eta);

/// Randomized classifier: visit counts over deduplicated base classifiers.
struct MixtureClassifier {
  std::vector<std::shared_ptr<const Classifier>> members;
  std::vector<long> counts;

  Eigen::VectorXd weights() const;  // counts normalized to sum 1
  std::size_t size() const { return members.size(); }
};

struct IterationRecord {
  int t = 0;                    // 1-based iteration index
  Eigen::VectorXd lambda;       // dual weights used this iteration
  double risk = 0.0;            // empirical error of h_t on the training set
  Eigen::VectorXd violations;   // gamma_hat(h_t)
  double lagrangian_value = 0.0;
  double gap = 0.0;
};

using IterationTrace = std::vector<IterationRecord>;

std::string trace_to_jsonl(const IterationTrace& trace);

/// Two-sided duality gap estimate:
///   [R(Q) + B * max(0, max_i(gamma_i(Q) - eps_i))] - L(best_response, lambda_bar)
/// where the bracket is the closed-form maximum of the Lagrangian over the
/// dual ball of radius `budget` and the subtrahend approximates its minimum
/// over classifiers by one oracle best response at the averaged dual
/// iterate. Clamped at 0 (with a warning) when oracle slack makes it
/// numerically negative.
double duality_gap(const MixtureClassifier& mixture, const Eigen::VectorXd& lambda_bar,
                   double budget, const Classifier& best_response,
                   const ConstraintSystem& system, const Dataset& dataset,
                   std::vector<std::string>* warnings = nullptr);

struct FitResult {
  MixtureClassifier mixture;
  IterationTrace trace;
  std::vector<std::string> warnings;
};

/// Runs the saddle-point loop: per iteration, derive dual weights, build the
/// cost-sensitive problem, fit a base classifier, update the auditor, and
/// stop once the duality gap drops below nu (after at least t_min rounds).
FitResult fit(const Dataset& dataset, const ConstraintSystem& system, const Oracle& oracle,
              const GegConfig& config);

/// Convenience overload that builds a softmax oracle from config.oracle.
FitResult fit(const Dataset& dataset, const ConstraintSystem& system, const GegConfig& config);

/// ExpectedVote: per row, argmax over classes of the weight-averaged member
/// scores (lowest class id wins ties). Sampled: draw one member per row from
/// the mixture with a seeded generator and use its prediction.
std::vector<int> mixture_predict(const MixtureClassifier& mixture,
                                 const Eigen::MatrixXd& features, PredictionMode mode,
                                 std::uint64_t seed = 0);

}  // namespace geg
