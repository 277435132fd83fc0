// Shared helpers for the test suites: small dataset builders, seeded
// instance generators, and independent brute-force oracles that the library
// implementations are checked against.
#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "geg/constraints.hpp"
#include "geg/dataset.hpp"
#include "geg/random.hpp"

namespace testing_support {

inline geg::Dataset tiny_dataset(const std::vector<int>& groups, const std::vector<int>& labels,
                                 int positive_label, int dims = 2) {
  const int n = static_cast<int>(groups.size());
  Eigen::MatrixXd features(n, dims);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < dims; ++j) features(i, j) = 0.1 * i + 0.01 * j;
  }
  return geg::Dataset::create(features, groups, labels, positive_label);
}

struct RandomInstance {
  geg::Dataset dataset;
  std::vector<int> predictions;
};

/// Random labeled instance with dense group/class ids and a prediction
/// vector; every group id is forced to appear so Dataset invariants hold.
inline RandomInstance random_instance(std::mt19937_64& gen, int max_rows = 50, int max_groups = 3,
                                      int max_classes = 4) {
  const int n_groups = 1 + static_cast<int>(geg::rng::below(gen, max_groups));
  const int n_classes = 2 + static_cast<int>(geg::rng::below(gen, max_classes - 1));
  const int n = std::max({n_groups, n_classes,
                          2 + static_cast<int>(geg::rng::below(gen, max_rows - 1))});

  std::vector<int> groups(n), labels(n), predictions(n);
  for (int i = 0; i < n; ++i) {
    groups[i] = i < n_groups ? i : static_cast<int>(geg::rng::below(gen, n_groups));
    labels[i] = i < n_classes ? i : static_cast<int>(geg::rng::below(gen, n_classes));
    predictions[i] = static_cast<int>(geg::rng::below(gen, n_classes));
  }
  const int y_p = static_cast<int>(geg::rng::below(gen, n_classes));

  Eigen::MatrixXd features = Eigen::MatrixXd::Zero(n, 2);
  for (int i = 0; i < n; ++i) {
    features(i, 0) = geg::rng::normal(gen);
    features(i, 1) = geg::rng::normal(gen);
  }
  return {geg::Dataset::create(features, groups, labels, y_p), predictions};
}

// ---- brute-force oracles ---------------------------------------------------

/// Counts an event/prediction moment directly from row scans.
inline bool brute_moment(const geg::Dataset& ds, const std::vector<int>& preds,
                         const geg::MomentDescriptor& m, double* value) {
  long event = 0, hits = 0;
  for (int i = 0; i < ds.rows(); ++i) {
    bool in = false;
    switch (m.kind) {
      case geg::MomentDescriptor::Kind::Group: in = ds.groups[i] == m.group; break;
      case geg::MomentDescriptor::Kind::Overall: in = true; break;
      case geg::MomentDescriptor::Kind::GroupCond:
        in = ds.groups[i] == m.group && ds.labels[i] == m.label;
        break;
      case geg::MomentDescriptor::Kind::OverallCond: in = ds.labels[i] == m.label; break;
    }
    if (in) {
      ++event;
      if (preds[i] == ds.positive_label) ++hits;
    }
  }
  if (event == 0) return false;
  *value = static_cast<double>(hits) / static_cast<double>(event);
  return true;
}

struct BruteMetrics {
  double accuracy, macro_precision, macro_recall, macro_f1;
  double spd, eod, aod, spd_p, eod_p, aod_p;
};

/// Straight-loop re-derivation of all ten metrics with the same
/// undefined-cell policy (empty denominator counts as 0).
inline BruteMetrics brute_metrics(const std::vector<int>& preds, const std::vector<int>& truth,
                                  const std::vector<int>& groups, int y_p, int k) {
  const int n = static_cast<int>(truth.size());
  BruteMetrics out{};

  int correct = 0;
  for (int i = 0; i < n; ++i) correct += preds[i] == truth[i];
  out.accuracy = double(correct) / n;

  double psum = 0, rsum = 0;
  for (int c = 0; c < k; ++c) {
    int tp = 0, pc = 0, ac = 0;
    for (int i = 0; i < n; ++i) {
      tp += preds[i] == c && truth[i] == c;
      pc += preds[i] == c;
      ac += truth[i] == c;
    }
    psum += pc > 0 ? double(tp) / pc : 0.0;
    rsum += ac > 0 ? double(tp) / ac : 0.0;
  }
  out.macro_precision = psum / k;
  out.macro_recall = rsum / k;
  out.macro_f1 = (out.macro_precision + out.macro_recall) > 0
                     ? 2 * out.macro_precision * out.macro_recall /
                           (out.macro_precision + out.macro_recall)
                     : 0.0;

  auto rate = [&](int target, int group, int cond /*-1 none, 0 truth==target, 1 truth!=target*/) {
    int hits = 0, total = 0;
    for (int i = 0; i < n; ++i) {
      if (groups[i] != group) continue;
      if (cond == 0 && truth[i] != target) continue;
      if (cond == 1 && truth[i] == target) continue;
      ++total;
      hits += preds[i] == target;
    }
    return total > 0 ? double(hits) / total : 0.0;
  };

  for (int c = 0; c < k; ++c) {
    const double sel = std::fabs(rate(c, 1, -1) - rate(c, 0, -1));
    const double tpr_gap = rate(c, 0, 0) - rate(c, 1, 0);
    const double fpr_gap = rate(c, 0, 1) - rate(c, 1, 1);
    out.spd = std::max(out.spd, sel);
    out.eod = std::max(out.eod, std::fabs(tpr_gap));
    out.aod = std::max(out.aod, std::fabs(0.5 * (tpr_gap + fpr_gap)));
    if (c == y_p) {
      out.spd_p = sel;
      out.eod_p = std::fabs(tpr_gap);
      out.aod_p = std::fabs(0.5 * (tpr_gap + fpr_gap));
    }
  }
  return out;
}

}  // namespace testing_support
