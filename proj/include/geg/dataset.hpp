#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "geg/errors.hpp"

namespace geg {

/// Immutable tabular instance set: features, sensitive group ids, class
/// labels, and the designated favourable class. Group and class ids are
/// dense integers in first-appearance order; the original values are kept
/// in group_names / class_names for reporting.
struct Dataset {
  Eigen::MatrixXd features;        // N x d
  std::vector<int> groups;         // in {0 .. num_groups-1}
  std::vector<int> labels;         // in {0 .. num_classes-1}
  int positive_label = 0;
  int num_groups = 0;
  int num_classes = 0;

  std::vector<std::string> feature_names;
  std::vector<std::string> group_names;
  std::vector<std::string> class_names;
  std::string label_column = "label";
  std::string sensitive_column = "group";

  int rows() const { return static_cast<int>(features.rows()); }
  int dims() const { return static_cast<int>(features.cols()); }

  /// Validating constructor: every stated invariant is checked here so the
  /// rest of the library can assume a well-formed instance.
  static Dataset create(Eigen::MatrixXd features, std::vector<int> groups,
                        std::vector<int> labels, int positive_label,
                        std::vector<std::string> feature_names = {},
                        std::vector<std::string> group_names = {},
                        std::vector<std::string> class_names = {});

  /// Row subset for CV splits. Keeps the parent's group/class universe and
  /// positive label; a fold missing some group or class stays representable.
  Dataset subset(const std::vector<int>& row_ids) const;
};

struct CsvSchema {
  std::string label_column;
  std::string sensitive_column;
  std::string positive_value;  // matched textually against the label column
};

/// Loads a comma-separated file: UTF-8, header row, '.' decimal separator.
/// All columns except the label and sensitive ones must be numeric.
Dataset load_csv(const std::string& path, const CsvSchema& schema);

/// Inverse of load_csv, using the dataset's stored column and value names.
/// Floats are written with enough digits to round-trip.
void write_csv(const Dataset& dataset, const std::string& path);

/// Assignment of each row to one of k folds.
struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // length N, values in {0..k-1}
  std::uint64_t seed = 0;

  std::vector<int> test_rows(int fold) const;
  std::vector<int> train_rows(int fold) const;
};

/// Shuffle-then-chunk split: a seeded permutation dealt into k contiguous
/// folds whose sizes differ by at most one. Deterministic in (N, k, seed).
FoldPlan kfold_split(const Dataset& dataset, int k, std::uint64_t seed);
FoldPlan kfold_split(int n_rows, int k, std::uint64_t seed);

/// Recipe for a two-group synthetic dataset with a controllable base-rate
/// gap between groups. positive_rate_per_group maps group id -> P(Y = y_p);
/// remaining label mass is spread uniformly over the other classes.
struct SyntheticSpec {
  int n = 1000;
  int d = 2;
  int num_classes = 2;
  double group_share = 0.5;  // fraction of rows with group 1
  std::map<int, double> positive_rate_per_group = {{0, 0.5}, {1, 0.5}};
  double noise_scale = 1.0;

  void validate() const;
};

/// Draws class-and-group-dependent Gaussian clusters so a linear model can
/// partially recover the labels. The positive label is class 0. The first
/// few rows introduce group and class ids in order, which keeps the dense
/// id assignment stable under CSV round-trips.
Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed);

}  // namespace geg
