#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "geg/dataset.hpp"

namespace geg {

enum class ConstraintKind { DemographicParity, EqualizedOdds, CombinedParity };

std::string to_string(ConstraintKind kind);
ConstraintKind constraint_kind_from_string(const std::string& name);

/// One conditional expectation of the indicator 1{h(X) = y_p}. The event is
/// a condition on (A, Y) only; the indicator's target class comes from the
/// dataset's positive label at evaluation time.
struct MomentDescriptor {
  enum class Kind { Group, Overall, GroupCond, OverallCond };
  Kind kind = Kind::Overall;
  int group = -1;  // for Group / GroupCond
  int label = -1;  // conditioning label for GroupCond / OverallCond

  bool contains(int row_group, int row_label) const {
    switch (kind) {
      case Kind::Group: return row_group == group;
      case Kind::Overall: return true;
      case Kind::GroupCond: return row_group == group && row_label == label;
      case Kind::OverallCond: return row_label == label;
    }
    return false;
  }

  std::string describe() const;
};

/// Linear system  M * mu(h) <= eps  over classifier moments. Rows come in
/// sign-flipped pairs: each parity equality is encoded as two inequalities,
/// so every row has exactly one +1 and one -1 entry.
struct ConstraintSystem {
  ConstraintKind kind = ConstraintKind::DemographicParity;
  Eigen::MatrixXd matrix;  // n x m, entries in {-1, 0, +1}
  Eigen::VectorXd eps;     // length n, nonnegative tolerances
  std::vector<MomentDescriptor> moments;

  int num_constraints() const { return static_cast<int>(matrix.rows()); }
  int num_moments() const { return static_cast<int>(matrix.cols()); }

  /// A system with no constraints; the solver degenerates to plain ERM.
  static ConstraintSystem none();
};

/// Builds the paired-inequality system for the requested fairness kind.
/// conditioning_labels selects which true-label slices the equalized-odds
/// rows cover (typically just the positive label; pass every class id for
/// the full definition). Ignored for demographic parity.
ConstraintSystem build_constraint_system(ConstraintKind kind, int num_groups,
                                         const std::vector<int>& conditioning_labels,
                                         double eps_default);

/// Empirical moments of a prediction vector. Moments whose conditioning
/// event is empty in the dataset are flagged undefined and reported as 0.
struct MomentEstimate {
  Eigen::VectorXd values;
  std::vector<bool> defined;
  std::vector<std::string> warnings;
};

MomentEstimate estimate_moments(const std::vector<int>& predictions, const Dataset& dataset,
                                const std::vector<MomentDescriptor>& moments);

/// gamma = M * mu. The solver thresholds gamma_i - eps_i.
Eigen::VectorXd constraint_violations(const ConstraintSystem& system, const Eigen::VectorXd& mu);

/// Per-sample linearization of the constraints: entry (i, j) is N times the
/// derivative of gamma_i with respect to row j's positive-prediction
/// indicator, i.e. sum_k M_ik * N * 1{j in E_k} / |E_k|. Columns belonging
/// to empty events contribute 0.
struct FairSignal {
  Eigen::MatrixXd values;  // n x N
  std::vector<std::string> warnings;
};

FairSignal per_sample_fairness_signal(const ConstraintSystem& system, const Dataset& dataset);

}  // namespace geg
