#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "geg/errors.hpp"

namespace geg {

struct EffectivenessScores {
  double accuracy = 0.0;
  double macro_precision = 0.0;
  double macro_recall = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::string> warnings;
};

/// Accuracy plus unweighted class means of precision and recall; classes
/// with an empty denominator contribute 0. macro_f1 is the harmonic mean of
/// the two macro scores, not the mean of per-class F1.
EffectivenessScores compute_effectiveness(const std::vector<int>& predictions,
                                          const std::vector<int>& truth, int num_classes);

struct FairnessScores {
  double spd = 0.0;    // max over classes of the group selection-rate gap
  double eod = 0.0;    // same, conditioned on the true label matching the class
  double aod = 0.0;    // max over classes of the averaged TPR/FPR gap
  double spd_p = 0.0;  // positive-label variants of the three above
  double eod_p = 0.0;
  double aod_p = 0.0;
  std::vector<std::string> warnings;
};

/// Group-fairness metrics for a binary sensitive attribute; all six values
/// are absolute. Conditional probabilities with empty denominators count as
/// 0 and are recorded in warnings.
FairnessScores compute_fairness(const std::vector<int>& predictions,
                                const std::vector<int>& truth, const std::vector<int>& groups,
                                int positive_label, int num_classes);

/// The ten metric values of one (approach, fold) evaluation.
struct MetricsReport {
  EffectivenessScores effectiveness;
  FairnessScores fairness;

  double value(const std::string& metric) const;
  nlohmann::json to_json() const;
  static MetricsReport from_json(const nlohmann::json& j);
};

const std::vector<std::string>& effectiveness_metric_names();
const std::vector<std::string>& fairness_metric_names();

/// One candidate solution for Pareto analysis: effectiveness is maximized,
/// fairness (a disparity, closer to 0 is better) minimized.
struct SolutionPoint {
  std::string approach;
  int fold = 0;
  double effectiveness = 0.0;
  double fairness = 0.0;
};

struct ParetoResult {
  std::vector<int> front_indices;        // ascending
  std::map<std::string, int> counts;     // front membership per approach
};

/// Non-dominated points under (max effectiveness, min fairness). Exact
/// duplicates do not dominate each other, so they all stay on the front.
ParetoResult pareto_front(const std::vector<SolutionPoint>& points);

enum class TestDirection { Greater, Less };

/// One-sided Wilcoxon signed-rank p-value for paired samples. Zero
/// differences are dropped; ties among absolute differences take average
/// ranks. Exact by full sign enumeration for up to 20 pairs, normal
/// approximation with tie correction beyond.
double wilcoxon_one_sided(const std::vector<double>& x, const std::vector<double>& y,
                          TestDirection direction);

struct HolmResult {
  std::vector<bool> reject;       // in input order
  std::vector<double> adjusted;   // in input order, capped at 1
};

/// Step-down Holm correction at level alpha.
HolmResult holm_bonferroni(const std::vector<double>& pvalues, double alpha);

}  // namespace geg
