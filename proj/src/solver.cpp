#include "geg/solver.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <json.hpp>

#include "geg/log.hpp"
#include "geg/random.hpp"

namespace geg {

void GegConfig::validate() const {
  if (!(eta > 0.0)) throw DataError("geg config: eta must be > 0");
  if (!(delta > 0.0)) throw DataError("geg config: delta must be > 0");
  if (!(nu > 0.0)) throw DataError("geg config: nu must be > 0");
  if (max_iter < 1) throw DataError("geg config: max_iter must be >= 1");
  if (t_min < 1 || t_min > max_iter) {
    throw DataError("geg config: t_min must lie in [1, max_iter]");
  }
  if (eps_default < 0.0) throw DataError("geg config: eps_default must be >= 0");
  oracle.validate();
}

Eigen::VectorXd dual_weights(const DualState& state) {
  const Eigen::Index n = state.theta.size();
  if (!state.theta.allFinite()) throw SolverError("dual state: non-finite theta");
  if (n == 0) return Eigen::VectorXd(0);

  // Shift every exponent, including the slack's exp(0), by the same amount;
  // ratios are unchanged and nothing overflows.
  const double shift = std::max(0.0, state.theta.maxCoeff());
  const Eigen::ArrayXd scaled = (state.theta.array() - shift).exp();
  const double denom = std::exp(-shift) + scaled.sum();
  Eigen::VectorXd lambda = state.budget * (scaled / denom).matrix();

  // Containment guard: summation error can push the total a few ulps past B
  // once the slack term underflows; rescale until the sum fits.
  for (int pass = 0; pass < 4 && lambda.sum() > state.budget; ++pass) {
    lambda *= (state.budget / lambda.sum()) * (1.0 - 1e-15);
  }
  return lambda;
}

CostSensitiveProblem build_cost_sensitive_problem(const Eigen::VectorXd& lambda,
                                                  const Dataset& dataset,
                                                  const Eigen::MatrixXd& fair_signal) {
  const int n_rows = dataset.rows();
  if (!lambda.allFinite()) throw SolverError("cost-sensitive problem: non-finite lambda");
  if (fair_signal.rows() != lambda.size() || fair_signal.cols() != n_rows) {
    throw SolverError("cost-sensitive problem: fairness signal shape mismatch");
  }

  CostSensitiveProblem problem;
  problem.signed_weights.resize(n_rows);
  problem.adjusted_labels.resize(n_rows);

  const Eigen::VectorXd fairness_term =
      lambda.size() > 0 ? Eigen::VectorXd(fair_signal.transpose() * lambda)
                        : Eigen::VectorXd::Zero(n_rows);
  for (int j = 0; j < n_rows; ++j) {
    const double error_term = dataset.labels[j] == dataset.positive_label ? 1.0 : -1.0;
    const double w = error_term - fairness_term(j);
    problem.signed_weights(j) = w;
    problem.adjusted_labels[j] = w > 0.0 ? dataset.positive_label : dataset.labels[j];
  }

  const double total = problem.signed_weights.array().abs().sum();
  if (total > 0.0) {
    problem.weights = static_cast<double>(n_rows) * problem.signed_weights.array().abs() / total;
  } else {
    problem.weights = Eigen::VectorXd::Ones(n_rows);
  }
  return problem;
}

double lagrangian(double risk, const Eigen::VectorXd& violations, const Eigen::VectorXd& lambda,
                  const Eigen::VectorXd& eps) {
  if (violations.size() != lambda.size() || violations.size() != eps.size()) {
    throw SolverError("lagrangian: length mismatch");
  }
  return risk + lambda.dot(violations - eps);
}

DualState dual_update(const DualState& state, const Eigen::VectorXd& violations,
                      const Eigen::VectorXd& eps, double eta) {
  if (violations.size() != state.theta.size() || eps.size() != state.theta.size()) {
    throw SolverError("dual update: length mismatch");
  }
  if (!violations.allFinite()) throw SolverError("dual update: non-finite violations");
  DualState next;
  next.budget = state.budget;
  next.theta = state.theta + eta * (violations - eps);
  return next;
}

Eigen::VectorXd MixtureClassifier::weights() const {
  Eigen::VectorXd w(static_cast<Eigen::Index>(counts.size()));
  long total = 0;
  for (long c : counts) total += c;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) = static_cast<double>(counts[i]) / static_cast<double>(total);
  }
  return w;
}

namespace {

double empirical_risk(const std::vector<int>& predictions, const std::vector<int>& truth) {
  long wrong = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    if (predictions[i] != truth[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(truth.size());
}

struct MemberStats {
  double risk = 0.0;
  Eigen::VectorXd violations;
};

MemberStats evaluate_member(const Classifier& member, const ConstraintSystem& system,
                            const Dataset& dataset, std::vector<std::string>* warnings) {
  MemberStats stats;
  const std::vector<int> preds = member.predict(dataset.features);
  stats.risk = empirical_risk(preds, dataset.labels);
  if (system.num_constraints() > 0) {
    const MomentEstimate mu = estimate_moments(preds, dataset, system.moments);
    if (warnings) warnings->insert(warnings->end(), mu.warnings.begin(), mu.warnings.end());
    stats.violations = constraint_violations(system, mu.values);
  } else {
    stats.violations = Eigen::VectorXd(0);
  }
  return stats;
}

double gap_value(double mixture_risk, const Eigen::VectorXd& mixture_violations, double budget,
                 double best_response_lagrangian, const ConstraintSystem& system,
                 std::vector<std::string>* warnings) {
  double primal = mixture_risk;
  if (system.num_constraints() > 0) {
    primal += budget * std::max(0.0, (mixture_violations - system.eps).maxCoeff());
  }
  double gap = primal - best_response_lagrangian;
  if (gap < 0.0) {
    if (warnings) warnings->push_back("duality gap " + std::to_string(gap) + " clamped to 0");
    gap = 0.0;
  }
  return gap;
}

}  // namespace

double duality_gap(const MixtureClassifier& mixture, const Eigen::VectorXd& lambda_bar,
                   double budget, const Classifier& best_response,
                   const ConstraintSystem& system, const Dataset& dataset,
                   std::vector<std::string>* warnings) {
  if (mixture.members.empty()) throw SolverError("duality gap: empty mixture");
  if (lambda_bar.size() != system.num_constraints()) {
    throw SolverError("duality gap: lambda length does not match the constraint system");
  }

  const Eigen::VectorXd w = mixture.weights();
  double mixture_risk = 0.0;
  Eigen::VectorXd mixture_violations = Eigen::VectorXd::Zero(system.num_constraints());
  for (std::size_t i = 0; i < mixture.members.size(); ++i) {
    const MemberStats stats = evaluate_member(*mixture.members[i], system, dataset, warnings);
    mixture_risk += w(static_cast<Eigen::Index>(i)) * stats.risk;
    if (system.num_constraints() > 0) {
      mixture_violations += w(static_cast<Eigen::Index>(i)) * stats.violations;
    }
  }

  const MemberStats br = evaluate_member(best_response, system, dataset, warnings);
  const double br_lagrangian = lagrangian(br.risk, br.violations, lambda_bar, system.eps);
  return gap_value(mixture_risk, mixture_violations, budget, br_lagrangian, system, warnings);
}

FitResult fit(const Dataset& dataset, const ConstraintSystem& system, const Oracle& oracle,
              const GegConfig& config) {
  config.validate();
  const int n_rows = dataset.rows();
  const int n_constraints = system.num_constraints();
  const double budget = config.budget();

  const FairSignal signal = per_sample_fairness_signal(system, dataset);

  FitResult result;
  result.warnings = signal.warnings;

  DualState state{Eigen::VectorXd::Zero(n_constraints), budget};
  Eigen::VectorXd lambda_sum = Eigen::VectorXd::Zero(n_constraints);

  // Risk/violations per deduplicated member, so mixture statistics are
  // weighted sums instead of repeated prediction passes.
  std::vector<MemberStats> member_stats;
  std::vector<std::uint64_t> member_prints;
  double mixture_risk = 0.0;
  Eigen::VectorXd mixture_violations = Eigen::VectorXd::Zero(n_constraints);
  long total_count = 0;

  log::debug("fit: signed weights use +1 on positive-label rows minus the dual-weighted "
             "fairness signal; lambda = 0 reduces to plain ERM");

  for (int t = 1; t <= config.max_iter; ++t) {
    const Eigen::VectorXd lambda = dual_weights(state);
    if ((lambda.array() < 0.0).any() || lambda.sum() > budget) {
      throw SolverError("iteration " + std::to_string(t) + ": dual weights left the ball");
    }

    const CostSensitiveProblem problem = build_cost_sensitive_problem(lambda, dataset, signal.values);
    if (std::abs(problem.weights.sum() - static_cast<double>(n_rows)) > 1e-9 * n_rows ||
        (problem.weights.array() < 0.0).any()) {
      throw SolverError("iteration " + std::to_string(t) + ": weight normalization failed");
    }

    std::shared_ptr<const Classifier> h;
    try {
      h = oracle(dataset.features, problem.adjusted_labels, problem.weights);
    } catch (const std::exception& e) {
      throw SolverError("oracle failed at iteration " + std::to_string(t) + ": " + e.what());
    }

    // Q[h_t] += 1, deduplicating bit-identical fits.
    const std::uint64_t print = h->fingerprint();
    std::size_t slot = member_prints.size();
    for (std::size_t i = 0; i < member_prints.size(); ++i) {
      if (member_prints[i] == print) {
        slot = i;
        break;
      }
    }
    if (slot == member_prints.size()) {
      member_prints.push_back(print);
      result.mixture.members.push_back(h);
      result.mixture.counts.push_back(0);
      member_stats.push_back(evaluate_member(*h, system, dataset, &result.warnings));
    }
    result.mixture.counts[slot] += 1;
    ++total_count;
    mixture_risk += member_stats[slot].risk;
    if (n_constraints > 0) mixture_violations += member_stats[slot].violations;

    const MemberStats& current = member_stats[slot];
    state = dual_update(state, current.violations, system.eps, config.eta);

    lambda_sum += lambda;
    const Eigen::VectorXd lambda_bar = lambda_sum / static_cast<double>(t);

    // One extra oracle call per iteration prices the best response at the
    // averaged dual iterate.
    const CostSensitiveProblem br_problem =
        build_cost_sensitive_problem(lambda_bar, dataset, signal.values);
    std::shared_ptr<const Classifier> h_br;
    try {
      h_br = oracle(dataset.features, br_problem.adjusted_labels, br_problem.weights);
    } catch (const std::exception& e) {
      throw SolverError("best-response oracle failed at iteration " + std::to_string(t) + ": " +
                        e.what());
    }
    const MemberStats br = evaluate_member(*h_br, system, dataset, &result.warnings);
    const double br_lagrangian = lagrangian(br.risk, br.violations, lambda_bar, system.eps);
    const double scale = 1.0 / static_cast<double>(total_count);
    const double gap = gap_value(mixture_risk * scale, mixture_violations * scale, budget,
                                 br_lagrangian, system, &result.warnings);

    IterationRecord record;
    record.t = t;
    record.lambda = lambda;
    record.risk = current.risk;
    record.violations = current.violations;
    record.lagrangian_value = lagrangian(current.risk, current.violations, lambda, system.eps);
    record.gap = gap;
    result.trace.push_back(std::move(record));

    if (gap < config.nu && t >= config.t_min) {
      log::info("fit: stopped at iteration " + std::to_string(t) + ", gap " +
                std::to_string(gap));
      break;
    }
  }

  return result;
}

FitResult fit(const Dataset& dataset, const ConstraintSystem& system, const GegConfig& config) {
  return fit(dataset, system, make_softmax_oracle(config.oracle, dataset.num_classes), config);
}

std::vector<int> mixture_predict(const MixtureClassifier& mixture,
                                 const Eigen::MatrixXd& features, PredictionMode mode,
                                 std::uint64_t seed) {
  if (mixture.members.empty()) throw SolverError("mixture predict: empty mixture");
  const Eigen::VectorXd w = mixture.weights();
  const Eigen::Index n = features.rows();

  if (mode == PredictionMode::ExpectedVote) {
    Eigen::MatrixXd votes =
        Eigen::MatrixXd::Zero(n, mixture.members.front()->num_classes());
    for (std::size_t i = 0; i < mixture.members.size(); ++i) {
      votes += w(static_cast<Eigen::Index>(i)) * mixture.members[i]->predict_scores(features);
    }
    std::vector<int> out(static_cast<std::size_t>(n));
    for (Eigen::Index r = 0; r < n; ++r) {
      int best = 0;
      for (Eigen::Index k = 1; k < votes.cols(); ++k) {
        if (votes(r, k) > votes(r, best)) best = static_cast<int>(k);
      }
      out[static_cast<std::size_t>(r)] = best;
    }
    return out;
  }

  // Sampled mode: one member draw per row, in row order.
  std::vector<std::vector<int>> member_preds;
  member_preds.reserve(mixture.members.size());
  for (const auto& member : mixture.members) member_preds.push_back(member->predict(features));

  std::mt19937_64 gen(seed);
  std::vector<int> out(static_cast<std::size_t>(n));
  for (Eigen::Index r = 0; r < n; ++r) {
    const double u = rng::uniform(gen);
    double cumulative = 0.0;
    std::size_t pick = mixture.members.size() - 1;
    for (std::size_t i = 0; i < mixture.members.size(); ++i) {
      cumulative += w(static_cast<Eigen::Index>(i));
      if (u < cumulative) {
        pick = i;
        break;
      }
    }
    out[static_cast<std::size_t>(r)] = member_preds[pick][static_cast<std::size_t>(r)];
  }
  return out;
}

std::string trace_to_jsonl(const IterationTrace& trace) {
  std::string out;
  for (const IterationRecord& rec : trace) {
    nlohmann::json j;
    j["t"] = rec.t;
    j["lambda"] = std::vector<double>(rec.lambda.data(), rec.lambda.data() + rec.lambda.size());
    j["risk"] = rec.risk;
    j["violations"] =
        std::vector<double>(rec.violations.data(), rec.violations.data() + rec.violations.size());
    j["lagrangian"] = rec.lagrangian_value;
    j["gap"] = rec.gap;
    out += j.dump();
    out += '\n';
  }
  return out;
}

}  // namespace geg
