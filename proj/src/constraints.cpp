#include "geg/constraints.hpp"

#include <stdexcept>

namespace geg {

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::DemographicParity: return "dp";
    case ConstraintKind::EqualizedOdds: return "eo";
    case ConstraintKind::CombinedParity: return "cp";
  }
  return "?";
}

ConstraintKind constraint_kind_from_string(const std::string& name) {
  if (name == "dp" || name == "sp") return ConstraintKind::DemographicParity;
  if (name == "eo") return ConstraintKind::EqualizedOdds;
  if (name == "cp") return ConstraintKind::CombinedParity;
  throw DataError("unknown constraint kind '" + name + "' (expected sp, eo or cp)");
}

std::string MomentDescriptor::describe() const {
  switch (kind) {
    case Kind::Group: return "mu[A=" + std::to_string(group) + "]";
    case Kind::Overall: return "mu[*]";
    case Kind::GroupCond:
      return "mu[A=" + std::to_string(group) + ",Y=" + std::to_string(label) + "]";
    case Kind::OverallCond: return "mu[*,Y=" + std::to_string(label) + "]";
  }
  return "?";
}

ConstraintSystem ConstraintSystem::none() {
  ConstraintSystem system;
  system.matrix.resize(0, 0);
  system.eps.resize(0);
  return system;
}

namespace {

// One parity block: for every group a, the pair mu_a = mu_ref becomes
//   +mu_a - mu_ref <= eps
//   -mu_a + mu_ref <= eps
// with the reference (unconditioned) moment in the block's last column.
void append_parity_block(Eigen::MatrixXd& matrix, int row_offset, int col_offset,
                         int num_groups) {
  const int ref = col_offset + num_groups;
  for (int a = 0; a < num_groups; ++a) {
    matrix(row_offset + 2 * a, col_offset + a) = 1.0;
    matrix(row_offset + 2 * a, ref) = -1.0;
    matrix(row_offset + 2 * a + 1, col_offset + a) = -1.0;
    matrix(row_offset + 2 * a + 1, ref) = 1.0;
  }
}

}  // namespace

ConstraintSystem build_constraint_system(ConstraintKind kind, int num_groups,
                                         const std::vector<int>& conditioning_labels,
                                         double eps_default) {
  if (num_groups < 1) throw DataError("constraint system needs at least one group");
  if (eps_default < 0.0) throw DataError("eps_default must be nonnegative");
  const bool needs_labels = kind != ConstraintKind::DemographicParity;
  if (needs_labels && conditioning_labels.empty()) {
    throw DataError("equalized-odds constraints need a nonempty conditioning label set");
  }

  std::vector<MomentDescriptor> moments;
  auto push_dp_block = [&] {
    for (int a = 0; a < num_groups; ++a) {
      moments.push_back({MomentDescriptor::Kind::Group, a, -1});
    }
    moments.push_back({MomentDescriptor::Kind::Overall, -1, -1});
  };
  auto push_eo_block = [&](int y) {
    for (int a = 0; a < num_groups; ++a) {
      moments.push_back({MomentDescriptor::Kind::GroupCond, a, y});
    }
    moments.push_back({MomentDescriptor::Kind::OverallCond, -1, y});
  };

  int blocks = 0;
  if (kind == ConstraintKind::DemographicParity || kind == ConstraintKind::CombinedParity) {
    push_dp_block();
    ++blocks;
  }
  if (kind == ConstraintKind::EqualizedOdds || kind == ConstraintKind::CombinedParity) {
    for (int y : conditioning_labels) {
      push_eo_block(y);
      ++blocks;
    }
  }

  const int rows = 2 * num_groups * blocks;
  const int cols = (num_groups + 1) * blocks;
  ConstraintSystem system;
  system.kind = kind;
  system.matrix = Eigen::MatrixXd::Zero(rows, cols);
  for (int b = 0; b < blocks; ++b) {
    append_parity_block(system.matrix, 2 * num_groups * b, (num_groups + 1) * b, num_groups);
  }
  system.eps = Eigen::VectorXd::Constant(rows, eps_default);
  system.moments = std::move(moments);
  return system;
}

MomentEstimate estimate_moments(const std::vector<int>& predictions, const Dataset& dataset,
                                const std::vector<MomentDescriptor>& moments) {
  const int n_rows = dataset.rows();
  if (static_cast<int>(predictions.size()) != n_rows) {
    throw DataError("predictions length does not match the dataset");
  }

  MomentEstimate est;
  est.values = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(moments.size()));
  est.defined.assign(moments.size(), true);
  for (std::size_t k = 0; k < moments.size(); ++k) {
    long event = 0;
    long positive = 0;
    for (int j = 0; j < n_rows; ++j) {
      if (moments[k].contains(dataset.groups[j], dataset.labels[j])) {
        ++event;
        if (predictions[j] == dataset.positive_label) ++positive;
      }
    }
    if (event == 0) {
      est.defined[k] = false;
      est.warnings.push_back("moment " + moments[k].describe() +
                             " undefined: conditioning event is empty; using 0");
    } else {
      est.values(static_cast<Eigen::Index>(k)) =
          static_cast<double>(positive) / static_cast<double>(event);
    }
  }
  return est;
}

Eigen::VectorXd constraint_violations(const ConstraintSystem& system, const Eigen::VectorXd& mu) {
  if (mu.size() != system.matrix.cols()) {
    throw DataError("moment vector length does not match the constraint system");
  }
  return system.matrix * mu;
}

FairSignal per_sample_fairness_signal(const ConstraintSystem& system, const Dataset& dataset) {
  const int n_rows = dataset.rows();
  const int n_constraints = system.num_constraints();
  const int n_moments = system.num_moments();

  FairSignal signal;
  signal.values = Eigen::MatrixXd::Zero(n_constraints, n_rows);

  // s(k, j) = N / |E_k| if row j lies in event E_k, else 0.
  Eigen::MatrixXd sensitivity = Eigen::MatrixXd::Zero(n_moments, n_rows);
  for (int k = 0; k < n_moments; ++k) {
    long event = 0;
    for (int j = 0; j < n_rows; ++j) {
      if (system.moments[k].contains(dataset.groups[j], dataset.labels[j])) ++event;
    }
    if (event == 0) {
      signal.warnings.push_back("moment " + system.moments[k].describe() +
                                " has an empty event; its signal contribution is 0");
      continue;
    }
    const double scale = static_cast<double>(n_rows) / static_cast<double>(event);
    for (int j = 0; j < n_rows; ++j) {
      if (system.moments[k].contains(dataset.groups[j], dataset.labels[j])) {
        sensitivity(k, j) = scale;
      }
    }
  }
  signal.values = system.matrix * sensitivity;
  return signal;
}

}  // namespace geg
