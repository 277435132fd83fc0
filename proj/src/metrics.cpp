#include "geg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace geg {

namespace {

void check_lengths(const std::vector<int>& predictions, const std::vector<int>& truth) {
  if (predictions.empty()) throw DataError("metrics: empty input");
  if (predictions.size() != truth.size()) throw DataError("metrics: length mismatch");
}

}  // namespace

EffectivenessScores compute_effectiveness(const std::vector<int>& predictions,
                                          const std::vector<int>& truth, int num_classes) {
  check_lengths(predictions, truth);
  const std::size_t n = truth.size();

  long correct = 0;
  std::vector<long> tp(num_classes, 0), predicted(num_classes, 0), actual(num_classes, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const int p = predictions[i];
    const int t = truth[i];
    if (p < 0 || p >= num_classes || t < 0 || t >= num_classes) {
      throw DataError("metrics: class id out of range");
    }
    if (p == t) {
      ++correct;
      ++tp[p];
    }
    ++predicted[p];
    ++actual[t];
  }

  EffectivenessScores scores;
  scores.accuracy = static_cast<double>(correct) / static_cast<double>(n);

  double precision_sum = 0.0;
  double recall_sum = 0.0;
  for (int k = 0; k < num_classes; ++k) {
    if (predicted[k] > 0) {
      precision_sum += static_cast<double>(tp[k]) / static_cast<double>(predicted[k]);
    } else {
      scores.warnings.push_back("precision undefined for class " + std::to_string(k) +
                                " (never predicted); using 0");
    }
    if (actual[k] > 0) {
      recall_sum += static_cast<double>(tp[k]) / static_cast<double>(actual[k]);
    } else {
      scores.warnings.push_back("recall undefined for class " + std::to_string(k) +
                                " (never observed); using 0");
    }
  }
  scores.macro_precision = precision_sum / num_classes;
  scores.macro_recall = recall_sum / num_classes;
  const double pr = scores.macro_precision + scores.macro_recall;
  scores.macro_f1 = pr > 0.0 ? 2.0 * scores.macro_precision * scores.macro_recall / pr : 0.0;
  return scores;
}

namespace {

struct RateCounter {
  long hits = 0;
  long total = 0;
};

// Rate gap hits0/total0 - hits1/total1 via one exact integer cross-product
// per branch, so complementary classes produce bit-identical magnitudes.
// Empty denominators follow the 0-plus-warning policy.
double rate_gap(const RateCounter& a, const RateCounter& b, const std::string& what,
                std::vector<std::string>& warnings) {
  if (a.total == 0 && b.total == 0) {
    warnings.push_back(what + " undefined for both groups (empty denominators); using 0");
    return 0.0;
  }
  if (a.total == 0) {
    warnings.push_back(what + " undefined for group 0 (empty denominator); using 0");
    return -static_cast<double>(b.hits) / static_cast<double>(b.total);
  }
  if (b.total == 0) {
    warnings.push_back(what + " undefined for group 1 (empty denominator); using 0");
    return static_cast<double>(a.hits) / static_cast<double>(a.total);
  }
  return static_cast<double>(a.hits * b.total - b.hits * a.total) /
         static_cast<double>(a.total * b.total);
}

}  // namespace

FairnessScores compute_fairness(const std::vector<int>& predictions,
                                const std::vector<int>& truth, const std::vector<int>& groups,
                                int positive_label, int num_classes) {
  check_lengths(predictions, truth);
  if (groups.size() != truth.size()) throw DataError("metrics: length mismatch");

  bool has[2] = {false, false};
  for (int g : groups) {
    if (g != 0 && g != 1) throw DataError("fairness metrics require binary groups {0,1}");
    has[g] = true;
  }
  if (!has[0] || !has[1]) throw DataError("fairness metrics require both groups present");

  FairnessScores scores;
  auto& warn = scores.warnings;

  // Per (class, group) tallies over the three denominators the metrics use:
  // the whole group, the group with Y == y, and the group with Y != y.
  const std::size_t n = truth.size();
  double spd = 0.0, eod = 0.0, aod = 0.0;
  for (int y = 0; y < num_classes; ++y) {
    RateCounter select[2], tpr[2], fpr[2];
    for (std::size_t i = 0; i < n; ++i) {
      const int g = groups[i];
      const bool hit = predictions[i] == y;
      ++select[g].total;
      select[g].hits += hit;
      if (truth[i] == y) {
        ++tpr[g].total;
        tpr[g].hits += hit;
      } else {
        ++fpr[g].total;
        fpr[g].hits += hit;
      }
    }
    const std::string cls = std::to_string(y);
    const double sel_gap = rate_gap(select[1], select[0], "P(h=" + cls + "|A)", warn);
    const double tpr_gap = rate_gap(tpr[0], tpr[1], "TPR(" + cls + ")", warn);
    const double fpr_gap = rate_gap(fpr[0], fpr[1], "FPR(" + cls + ")", warn);

    spd = std::max(spd, std::abs(sel_gap));
    eod = std::max(eod, std::abs(tpr_gap));
    aod = std::max(aod, std::abs(0.5 * (fpr_gap + tpr_gap)));

    if (y == positive_label) {
      scores.spd_p = std::abs(sel_gap);
      scores.eod_p = std::abs(tpr_gap);
      scores.aod_p = std::abs(0.5 * (fpr_gap + tpr_gap));
    }
  }
  scores.spd = spd;
  scores.eod = eod;
  scores.aod = aod;
  return scores;
}

const std::vector<std::string>& effectiveness_metric_names() {
  static const std::vector<std::string> names = {"accuracy", "macro_precision", "macro_recall",
                                                 "macro_f1"};
  return names;
}

const std::vector<std::string>& fairness_metric_names() {
  static const std::vector<std::string> names = {"spd", "eod", "aod",
                                                 "spd_p", "eod_p", "aod_p"};
  return names;
}

double MetricsReport::value(const std::string& metric) const {
  if (metric == "accuracy") return effectiveness.accuracy;
  if (metric == "macro_precision") return effectiveness.macro_precision;
  if (metric == "macro_recall") return effectiveness.macro_recall;
  if (metric == "macro_f1") return effectiveness.macro_f1;
  if (metric == "spd") return fairness.spd;
  if (metric == "eod") return fairness.eod;
  if (metric == "aod") return fairness.aod;
  if (metric == "spd_p") return fairness.spd_p;
  if (metric == "eod_p") return fairness.eod_p;
  if (metric == "aod_p") return fairness.aod_p;
  throw DataError("unknown metric '" + metric + "'");
}

nlohmann::json MetricsReport::to_json() const {
  nlohmann::json j;
  j["accuracy"] = effectiveness.accuracy;
  j["macro_precision"] = effectiveness.macro_precision;
  j["macro_recall"] = effectiveness.macro_recall;
  j["macro_f1"] = effectiveness.macro_f1;
  j["spd"] = fairness.spd;
  j["eod"] = fairness.eod;
  j["aod"] = fairness.aod;
  j["spd_p"] = fairness.spd_p;
  j["eod_p"] = fairness.eod_p;
  j["aod_p"] = fairness.aod_p;
  nlohmann::json warnings = nlohmann::json::array();
  for (const auto& w : effectiveness.warnings) warnings.push_back(w);
  for (const auto& w : fairness.warnings) warnings.push_back(w);
  j["warnings"] = std::move(warnings);
  return j;
}

MetricsReport MetricsReport::from_json(const nlohmann::json& j) {
  MetricsReport report;
  report.effectiveness.accuracy = j.at("accuracy").get<double>();
  report.effectiveness.macro_precision = j.at("macro_precision").get<double>();
  report.effectiveness.macro_recall = j.at("macro_recall").get<double>();
  report.effectiveness.macro_f1 = j.at("macro_f1").get<double>();
  report.fairness.spd = j.at("spd").get<double>();
  report.fairness.eod = j.at("eod").get<double>();
  report.fairness.aod = j.at("aod").get<double>();
  report.fairness.spd_p = j.at("spd_p").get<double>();
  report.fairness.eod_p = j.at("eod_p").get<double>();
  report.fairness.aod_p = j.at("aod_p").get<double>();
  if (j.contains("warnings")) {
    for (const auto& w : j["warnings"]) report.effectiveness.warnings.push_back(w.get<std::string>());
  }
  return report;
}

ParetoResult pareto_front(const std::vector<SolutionPoint>& points) {
  if (points.empty()) throw DataError("pareto front: empty input");
  const std::size_t n = points.size();

  auto dominates = [](const SolutionPoint& p, const SolutionPoint& q) {
    return p.effectiveness >= q.effectiveness && p.fairness <= q.fairness &&
           (p.effectiveness > q.effectiveness || p.fairness < q.fairness);
  };

  ParetoResult result;
  for (std::size_t i = 0; i < n; ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < n && !dominated; ++j) {
      dominated = j != i && dominates(points[j], points[i]);
    }
    if (!dominated) {
      result.front_indices.push_back(static_cast<int>(i));
      result.counts[points[i].approach] += 1;
    }
  }
  return result;
}

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

double wilcoxon_one_sided(const std::vector<double>& x, const std::vector<double>& y,
                          TestDirection direction) {
  if (x.size() != y.size()) throw DataError("wilcoxon: length mismatch");

  std::vector<double> diffs;
  diffs.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    if (d != 0.0) diffs.push_back(d);
  }
  const int n = static_cast<int>(diffs.size());
  if (n == 0) throw DataError("wilcoxon: degenerate sample (all differences zero)");

  // Average ranks of |d|; doubled so tied ranks stay exact integers.
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](int a, int b) { return std::abs(diffs[a]) < std::abs(diffs[b]); });
  std::vector<long> rank2(n, 0);
  std::vector<long> tie_sizes;
  for (int i = 0; i < n;) {
    int j = i;
    while (j < n && std::abs(diffs[order[j]]) == std::abs(diffs[order[i]])) ++j;
    const long doubled = (i + 1) + j;  // 2 * average of ranks i+1 .. j
    for (int k = i; k < j; ++k) rank2[order[k]] = doubled;
    tie_sizes.push_back(j - i);
    i = j;
  }

  long w_plus2 = 0;
  long total2 = 0;
  for (int i = 0; i < n; ++i) {
    total2 += rank2[i];
    if (diffs[i] > 0.0) w_plus2 += rank2[i];
  }

  if (n <= 20) {
    // Exact null distribution by enumerating every sign assignment.
    long count = 0;
    const std::uint64_t patterns = 1ull << n;
    for (std::uint64_t mask = 0; mask < patterns; ++mask) {
      long w2 = 0;
      for (int i = 0; i < n; ++i) {
        if (mask & (1ull << i)) w2 += rank2[i];
      }
      if (direction == TestDirection::Greater ? w2 >= w_plus2 : w2 <= w_plus2) ++count;
    }
    return static_cast<double>(count) / static_cast<double>(patterns);
  }

  // Normal approximation with tie-corrected variance.
  const double nn = static_cast<double>(n);
  const double mean = nn * (nn + 1.0) / 4.0;
  double variance = nn * (nn + 1.0) * (2.0 * nn + 1.0) / 24.0;
  for (long t : tie_sizes) {
    variance -= static_cast<double>(t * t * t - t) / 48.0;
  }
  const double w_plus = static_cast<double>(w_plus2) / 2.0;
  const double z = (w_plus - mean) / std::sqrt(variance);
  return direction == TestDirection::Greater ? 1.0 - normal_cdf(z) : normal_cdf(z);
}

HolmResult holm_bonferroni(const std::vector<double>& pvalues, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw DataError("holm: alpha must lie in (0,1)");
  const int m = static_cast<int>(pvalues.size());
  for (double p : pvalues) {
    if (!(p >= 0.0 && p <= 1.0)) throw DataError("holm: p-value out of [0,1]");
  }

  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return pvalues[a] < pvalues[b]; });

  HolmResult result;
  result.reject.assign(m, false);
  result.adjusted.assign(m, 0.0);

  bool stopped = false;
  double running_max = 0.0;
  for (int i = 0; i < m; ++i) {
    const double p = pvalues[order[i]];
    const double factor = static_cast<double>(m - i);
    running_max = std::max(running_max, factor * p);
    result.adjusted[order[i]] = std::min(1.0, running_max);
    if (!stopped && p < alpha / factor) {
      result.reject[order[i]] = true;
    } else {
      stopped = true;
    }
  }
  return result;
}

}  // namespace geg
