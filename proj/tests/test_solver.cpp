#include <doctest.h>

#include <cmath>
#include <random>

#include <json.hpp>

#include "geg/solver.hpp"
#include "test_support.hpp"

using geg::ConstraintKind;
using geg::ConstraintSystem;
using geg::Dataset;
using geg::DualState;
using geg::GegConfig;
using geg::MixtureClassifier;
using geg::SolverError;

namespace {

/// Test double with a frozen prediction vector; scores are one-hot rows.
class FakeClassifier : public geg::Classifier {
 public:
  FakeClassifier(std::vector<int> predictions, int num_classes)
      : predictions_(std::move(predictions)), num_classes_(num_classes) {}

  int num_classes() const override { return num_classes_; }

  Eigen::MatrixXd predict_scores(const Eigen::MatrixXd& features) const override {
    REQUIRE(features.rows() == static_cast<Eigen::Index>(predictions_.size()));
    Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(features.rows(), num_classes_);
    for (Eigen::Index i = 0; i < features.rows(); ++i) {
      scores(i, predictions_[static_cast<std::size_t>(i)]) = 1.0;
    }
    return scores;
  }

  std::uint64_t fingerprint() const override {
    std::uint64_t h = 14695981039346656037ull;
    for (int p : predictions_) h = (h ^ static_cast<std::uint64_t>(p + 1)) * 1099511628211ull;
    return h;
  }

  nlohmann::json to_json() const override { return {{"type", "fake"}}; }

 private:
  std::vector<int> predictions_;
  int num_classes_;
};

std::shared_ptr<const geg::Classifier> fake(std::vector<int> preds, int k) {
  return std::make_shared<const FakeClassifier>(std::move(preds), k);
}

GegConfig quick_config() {
  GegConfig config;
  config.oracle.max_epochs = 60;
  config.oracle.tol = 1e-6;
  return config;
}

}  // namespace

TEST_CASE("dual weights follow the slack-augmented softmax") {
  SUBCASE("zero theta splits the budget evenly") {
    const Eigen::VectorXd lambda = geg::dual_weights({Eigen::VectorXd::Zero(4), 20.0});
    CHECK(lambda == Eigen::VectorXd::Constant(4, 4.0));
    CHECK(lambda.sum() == 16.0);
  }
  SUBCASE("single coordinate") {
    Eigen::VectorXd theta(1);
    theta << std::log(3.0);
    const Eigen::VectorXd lambda = geg::dual_weights({theta, 20.0});
    CHECK(lambda(0) == doctest::Approx(15.0).epsilon(1e-14));
  }
  SUBCASE("two coordinates") {
    Eigen::VectorXd theta(2);
    theta << 0.0, std::log(4.0);
    const Eigen::VectorXd lambda = geg::dual_weights({theta, 10.0});
    CHECK(lambda(0) == doctest::Approx(10.0 / 6.0).epsilon(1e-14));
    CHECK(lambda(1) == doctest::Approx(40.0 / 6.0).epsilon(1e-14));
  }
  SUBCASE("huge theta saturates without overflow") {
    Eigen::VectorXd theta(2);
    theta << 1000.0, -1000.0;
    const Eigen::VectorXd lambda = geg::dual_weights({theta, 20.0});
    CHECK(std::isfinite(lambda(0)));
    CHECK(lambda(0) == doctest::Approx(20.0).epsilon(1e-12));
    CHECK(lambda(1) >= 0.0);
    CHECK(lambda.sum() <= 20.0);
  }
  SUBCASE("containment holds for random states") {
    std::mt19937_64 gen(5);
    for (int trial = 0; trial < 200; ++trial) {
      const int n = 1 + static_cast<int>(geg::rng::below(gen, 12));
      Eigen::VectorXd theta(n);
      for (int i = 0; i < n; ++i) theta(i) = 60.0 * (geg::rng::uniform(gen) - 0.5);
      const double budget = 0.5 + 40.0 * geg::rng::uniform(gen);
      const Eigen::VectorXd lambda = geg::dual_weights({theta, budget});
      CHECK(lambda.minCoeff() >= 0.0);
      CHECK(lambda.sum() <= budget);
    }
  }
  SUBCASE("non-finite theta is rejected") {
    Eigen::VectorXd theta(1);
    theta << std::nan("");
    CHECK_THROWS_AS(geg::dual_weights({theta, 20.0}), SolverError);
  }
}

TEST_CASE("cost-sensitive problem construction") {
  const Dataset ds = testing_support::tiny_dataset({0, 0, 1, 1}, {1, 0, 1, 0}, 1);

  SUBCASE("zero dual recovers plain ERM") {
    const ConstraintSystem sys =
        geg::build_constraint_system(ConstraintKind::DemographicParity, 2, {}, 0.0);
    const auto signal = geg::per_sample_fairness_signal(sys, ds);
    const auto problem =
        geg::build_cost_sensitive_problem(Eigen::VectorXd::Zero(4), ds, signal.values);
    CHECK(problem.adjusted_labels == ds.labels);
    CHECK(problem.weights == Eigen::VectorXd::Ones(4));
    Eigen::VectorXd expected(4);
    expected << 1, -1, 1, -1;  // +1 on positive-label rows
    CHECK(problem.signed_weights == expected);
  }

  SUBCASE("worked two-row example") {
    const Dataset two = testing_support::tiny_dataset({0, 1}, {1, 0}, 1);
    Eigen::VectorXd lambda(1);
    lambda << 2.0;
    Eigen::MatrixXd signal(1, 2);
    signal << -0.5, 0.5;
    const auto problem = geg::build_cost_sensitive_problem(lambda, two, signal);
    CHECK(problem.signed_weights(0) == 2.0);   // +1 - 2*(-0.5)
    CHECK(problem.signed_weights(1) == -2.0);  // -1 - 2*(+0.5)
    CHECK(problem.adjusted_labels == std::vector<int>{1, 0});
    CHECK(problem.weights == Eigen::VectorXd::Ones(2));
  }

  SUBCASE("zero signed weight keeps the original label") {
    const Dataset two = testing_support::tiny_dataset({0, 1}, {1, 0}, 1);
    Eigen::VectorXd lambda(1);
    lambda << 1.0;
    Eigen::MatrixXd signal(1, 2);
    signal << 1.0, -1.0;  // cancels the error term exactly
    const auto problem = geg::build_cost_sensitive_problem(lambda, two, signal);
    CHECK(problem.signed_weights == Eigen::VectorXd::Zero(2));
    CHECK(problem.adjusted_labels == two.labels);
    CHECK(problem.weights == Eigen::VectorXd::Ones(2));  // all-zero fallback
  }

  SUBCASE("normalized weights sum to N") {
    std::mt19937_64 gen(31);
    const ConstraintSystem sys =
        geg::build_constraint_system(ConstraintKind::DemographicParity, 2, {}, 0.0);
    const auto signal = geg::per_sample_fairness_signal(sys, ds);
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::VectorXd lambda(4);
      for (int i = 0; i < 4; ++i) lambda(i) = 5.0 * geg::rng::uniform(gen);
      const auto problem = geg::build_cost_sensitive_problem(lambda, ds, signal.values);
      CHECK(problem.weights.sum() == doctest::Approx(4.0).epsilon(1e-12));
      CHECK(problem.weights.minCoeff() >= 0.0);
    }
  }

  SUBCASE("non-finite lambda is rejected") {
    Eigen::VectorXd lambda(1);
    lambda << std::numeric_limits<double>::infinity();
    Eigen::MatrixXd signal = Eigen::MatrixXd::Zero(1, 4);
    CHECK_THROWS_AS(geg::build_cost_sensitive_problem(lambda, ds, signal), SolverError);
  }
}

TEST_CASE("lagrangian arithmetic") {
  Eigen::VectorXd v1(1), l1(1), e1(1);
  v1 << 0.1;
  l1 << 4.0;
  e1 << 0.0;
  CHECK(geg::lagrangian(0.2, v1, l1, e1) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(geg::lagrangian(0.2, v1, Eigen::VectorXd::Zero(1), e1) == 0.2);

  Eigen::VectorXd v2(2), l2(2), e2(2);
  v2 << 0.2, 0.1;
  l2 << 1.0, 2.0;
  e2 << 0.05, 0.05;
  CHECK(geg::lagrangian(0.5, v2, l2, e2) == doctest::Approx(0.75).epsilon(1e-15));

  SUBCASE("affine in lambda") {
    std::mt19937_64 gen(13);
    for (int trial = 0; trial < 50; ++trial) {
      const int n = 1 + static_cast<int>(geg::rng::below(gen, 6));
      Eigen::VectorXd v(n), la(n), lb(n), eps(n);
      for (int i = 0; i < n; ++i) {
        v(i) = geg::rng::normal(gen);
        la(i) = geg::rng::uniform(gen);
        lb(i) = geg::rng::uniform(gen);
        eps(i) = 0.1 * geg::rng::uniform(gen);
      }
      const double risk = geg::rng::uniform(gen);
      const double alpha = geg::rng::uniform(gen);
      const double blended = geg::lagrangian(risk, v, alpha * la + (1 - alpha) * lb, eps);
      const double mixed =
          alpha * geg::lagrangian(risk, v, la, eps) + (1 - alpha) * geg::lagrangian(risk, v, lb, eps);
      CHECK(blended == doctest::Approx(mixed).epsilon(1e-12));
    }
  }
  SUBCASE("length mismatch") {
    CHECK_THROWS_AS(geg::lagrangian(0.1, v1, l2, e1), SolverError);
  }
}

TEST_CASE("dual update is the additive step") {
  Eigen::VectorXd theta(1), gamma(1), eps(1);
  theta << 0.0;
  gamma << 0.3;
  eps << 0.05;
  const DualState next = geg::dual_update({theta, 20.0}, gamma, eps, 2.0);
  CHECK(next.theta(0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(next.budget == 20.0);

  SUBCASE("gamma equal to eps is a fixed point") {
    const DualState same = geg::dual_update({theta, 20.0}, eps, eps, 2.0);
    CHECK(same.theta == theta);
  }
  SUBCASE("tiny literature step") {
    Eigen::VectorXd one(1), zero(1);
    one << 1.0;
    zero << 0.0;
    const DualState stepped = geg::dual_update({theta, 20.0}, one, zero, 1e-5);
    CHECK(stepped.theta(0) == doctest::Approx(1e-5).epsilon(1e-15));
  }
  SUBCASE("non-finite violations are rejected") {
    Eigen::VectorXd bad(1);
    bad << std::nan("");
    CHECK_THROWS_AS(geg::dual_update({theta, 20.0}, bad, eps, 1.0), SolverError);
  }
}

TEST_CASE("duality gap") {
  SUBCASE("no constraints, best response equals the single member") {
    const Dataset ds = testing_support::tiny_dataset({0, 0, 1, 1}, {1, 0, 1, 0}, 1);
    MixtureClassifier mixture;
    mixture.members.push_back(fake({1, 0, 1, 0}, 2));
    mixture.counts.push_back(1);
    const double gap = geg::duality_gap(mixture, Eigen::VectorXd(0), 20.0,
                                        *mixture.members[0], ConstraintSystem::none(), ds);
    CHECK(gap == 0.0);
  }

  SUBCASE("feasible single-member mixture at zero dual") {
    const Dataset ds = testing_support::tiny_dataset({0, 0, 1, 1}, {1, 0, 1, 0}, 1);
    const ConstraintSystem sys =
        geg::build_constraint_system(ConstraintKind::DemographicParity, 2, {}, 0.0);
    // one positive prediction per group: mu_0 = mu_1 = mu_* = 0.5
    MixtureClassifier mixture;
    mixture.members.push_back(fake({1, 0, 1, 0}, 2));
    mixture.counts.push_back(1);
    const double gap = geg::duality_gap(mixture, Eigen::VectorXd::Zero(4), 20.0,
                                        *mixture.members[0], sys, ds);
    CHECK(gap == 0.0);
  }

  SUBCASE("worked arithmetic") {
    // 20 rows, groups 10/10. mixture predicts y_p on 4 group-0 and 2 group-1
    // rows: mu_0 = 0.4, mu_1 = 0.2, mu_* = 0.3. Single constraint row
    // mu_0 - mu_* gives gamma = 0.1. Labels make the mixture wrong on 6 rows
    // (risk 0.3) and the best response wrong on 5 (risk 0.25, lambda_bar 0).
    std::vector<int> groups(20), mix_preds(20, 0), br_preds(20, 0), labels(20);
    for (int i = 0; i < 20; ++i) groups[i] = i < 10 ? 0 : 1;
    for (int i = 0; i < 4; ++i) mix_preds[i] = 1;
    for (int i = 10; i < 12; ++i) mix_preds[i] = 1;
    labels = mix_preds;
    for (int i = 4; i < 10; ++i) labels[i] = 1;  // mixture wrong on 6 rows
    br_preds = labels;
    for (int i = 12; i < 17; ++i) br_preds[i] = 1 - labels[i];  // best response wrong on 5

    const Dataset ds = testing_support::tiny_dataset(groups, labels, 1);
    ConstraintSystem sys;
    sys.matrix = Eigen::MatrixXd(1, 2);
    sys.matrix << 1.0, -1.0;
    sys.eps = Eigen::VectorXd::Zero(1);
    sys.moments = {{geg::MomentDescriptor::Kind::Group, 0, -1},
                   {geg::MomentDescriptor::Kind::Overall, -1, -1}};

    MixtureClassifier mixture;
    mixture.members.push_back(fake(mix_preds, 2));
    mixture.counts.push_back(1);
    const FakeClassifier best(br_preds, 2);
    const double gap =
        geg::duality_gap(mixture, Eigen::VectorXd::Zero(1), 20.0, best, sys, ds);
    CHECK(gap == doctest::Approx(0.3 + 20.0 * 0.1 - 0.25).epsilon(1e-12));
  }

  SUBCASE("empty mixture is rejected") {
    const Dataset ds = testing_support::tiny_dataset({0, 1}, {1, 0}, 1);
    MixtureClassifier empty;
    CHECK_THROWS_AS(geg::duality_gap(empty, Eigen::VectorXd(0), 20.0,
                                     FakeClassifier({1, 0}, 2), ConstraintSystem::none(), ds),
                    SolverError);
  }
}

TEST_CASE("fit with no constraints recovers the direct oracle fit") {
  geg::SyntheticSpec spec;
  spec.n = 120;
  spec.num_classes = 3;
  spec.positive_rate_per_group = {{0, 0.3}, {1, 0.6}};

  for (std::uint64_t seed : {3ull, 4ull, 5ull}) {
    const Dataset ds = geg::generate_synthetic(spec, seed);
    GegConfig config = quick_config();
    config.max_iter = 1;
    config.t_min = 1;
    const auto result = geg::fit(ds, ConstraintSystem::none(), config);
    REQUIRE(result.mixture.size() == 1);

    const geg::SoftmaxClassifier direct =
        geg::fit_softmax(ds.features, ds.labels, Eigen::VectorXd::Ones(ds.rows()),
                         config.oracle, ds.num_classes);
    CHECK(geg::mixture_predict(result.mixture, ds.features, geg::PredictionMode::ExpectedVote) ==
          direct.predict(ds.features));
    CHECK(result.trace.back().gap == 0.0);
  }
}

TEST_CASE("fit respects the loop contract and is deterministic") {
  geg::SyntheticSpec spec;
  spec.n = 160;
  spec.positive_rate_per_group = {{0, 0.25}, {1, 0.75}};
  const Dataset ds = geg::generate_synthetic(spec, 9);
  const ConstraintSystem sys =
      geg::build_constraint_system(ConstraintKind::DemographicParity, 2, {}, 0.0);

  GegConfig config = quick_config();
  config.eta = 0.4;
  config.max_iter = 12;
  config.t_min = 3;
  config.nu = 1e-3;

  const auto a = geg::fit(ds, sys, config);
  const auto b = geg::fit(ds, sys, config);

  CHECK(a.trace.size() <= 12);
  if (a.trace.size() < 12) {
    CHECK(a.trace.back().gap < config.nu);
    CHECK(a.trace.back().t >= config.t_min);
  }
  for (const auto& rec : a.trace) {
    CHECK(rec.lambda.minCoeff() >= 0.0);
    CHECK(rec.lambda.sum() <= config.budget());
    CHECK(rec.gap >= 0.0);
  }

  // bitwise determinism across runs
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].lambda == b.trace[i].lambda);
    CHECK(a.trace[i].risk == b.trace[i].risk);
    CHECK(a.trace[i].gap == b.trace[i].gap);
  }
  CHECK(geg::mixture_predict(a.mixture, ds.features, geg::PredictionMode::ExpectedVote) ==
        geg::mixture_predict(b.mixture, ds.features, geg::PredictionMode::ExpectedVote));

  // the trace gap is reproducible through the public duality_gap operation
  // at the final averaged dual iterate
  Eigen::VectorXd lambda_sum = Eigen::VectorXd::Zero(sys.num_constraints());
  for (const auto& rec : a.trace) lambda_sum += rec.lambda;
  const Eigen::VectorXd lambda_bar = lambda_sum / static_cast<double>(a.trace.size());
  const auto br_problem = geg::build_cost_sensitive_problem(
      lambda_bar, ds, geg::per_sample_fairness_signal(sys, ds).values);
  const auto br = geg::fit_softmax(ds.features, br_problem.adjusted_labels, br_problem.weights,
                                   config.oracle, ds.num_classes);
  const double gap =
      geg::duality_gap(a.mixture, lambda_bar, config.budget(), br, sys, ds);
  CHECK(gap == doctest::Approx(a.trace.back().gap).epsilon(1e-12));
}

TEST_CASE("identical oracle fits are deduplicated with accumulated counts") {
  geg::SyntheticSpec spec;
  spec.n = 80;
  const Dataset ds = geg::generate_synthetic(spec, 21);
  GegConfig config = quick_config();
  config.max_iter = 3;
  config.t_min = 3;
  const auto result = geg::fit(ds, ConstraintSystem::none(), config);
  REQUIRE(result.mixture.size() == 1);
  CHECK(result.mixture.counts[0] == 3);
  CHECK(result.mixture.weights()(0) == 1.0);
}

TEST_CASE("mixture predictions") {
  const Dataset ds = testing_support::tiny_dataset({0, 0, 1, 1}, {1, 0, 1, 0}, 1);

  SUBCASE("single member matches the member in both modes") {
    MixtureClassifier mixture;
    mixture.members.push_back(fake({1, 0, 0, 1}, 2));
    mixture.counts.push_back(7);
    const auto member_preds = mixture.members[0]->predict(ds.features);
    CHECK(geg::mixture_predict(mixture, ds.features, geg::PredictionMode::ExpectedVote) ==
          member_preds);
    CHECK(geg::mixture_predict(mixture, ds.features, geg::PredictionMode::Sampled, 5) ==
          member_preds);
  }

  SUBCASE("unanimous members win regardless of counts") {
    MixtureClassifier mixture;
    mixture.members.push_back(fake({1, 1, 1, 1}, 2));
    mixture.members.push_back(fake({1, 1, 1, 1}, 2));
    mixture.counts = {3, 1};
    CHECK(geg::mixture_predict(mixture, ds.features, geg::PredictionMode::ExpectedVote) ==
          std::vector<int>{1, 1, 1, 1});
  }

  SUBCASE("exact score ties resolve to the lowest class id") {
    MixtureClassifier mixture;
    mixture.members.push_back(fake({0, 0, 0, 0}, 3));
    mixture.members.push_back(fake({2, 2, 2, 2}, 3));
    mixture.counts = {1, 1};
    CHECK(geg::mixture_predict(mixture, ds.features, geg::PredictionMode::ExpectedVote) ==
          std::vector<int>{0, 0, 0, 0});
  }

  SUBCASE("sampled mode is seed-deterministic") {
    MixtureClassifier mixture;
    mixture.members.push_back(fake({0, 0, 0, 0}, 2));
    mixture.members.push_back(fake({1, 1, 1, 1}, 2));
    mixture.counts = {1, 1};
    const auto a = geg::mixture_predict(mixture, ds.features, geg::PredictionMode::Sampled, 42);
    const auto b = geg::mixture_predict(mixture, ds.features, geg::PredictionMode::Sampled, 42);
    CHECK(a == b);
  }
}

TEST_CASE("trace serializes to one json record per iteration") {
  geg::SyntheticSpec spec;
  spec.n = 60;
  const Dataset ds = geg::generate_synthetic(spec, 77);
  const ConstraintSystem sys =
      geg::build_constraint_system(ConstraintKind::DemographicParity, 2, {}, 0.0);
  GegConfig config = quick_config();
  config.max_iter = 4;
  config.t_min = 4;
  config.eta = 0.2;
  const auto result = geg::fit(ds, sys, config);

  const std::string jsonl = geg::trace_to_jsonl(result.trace);
  std::size_t lines = 0;
  std::size_t start = 0;
  while (start < jsonl.size()) {
    const std::size_t end = jsonl.find('\n', start);
    const nlohmann::json rec = nlohmann::json::parse(jsonl.substr(start, end - start));
    CHECK(rec.at("t").get<int>() == static_cast<int>(lines) + 1);
    CHECK(rec.at("lambda").size() == 4);
    CHECK(rec.contains("risk"));
    CHECK(rec.contains("violations"));
    CHECK(rec.contains("lagrangian"));
    CHECK(rec.contains("gap"));
    ++lines;
    start = end + 1;
  }
  CHECK(lines == result.trace.size());
}

TEST_CASE("config validation") {
  GegConfig config;
  config.t_min = 10;
  config.max_iter = 5;
  CHECK_THROWS_AS(config.validate(), geg::DataError);
  config = GegConfig{};
  config.eta = 0.0;
  CHECK_THROWS_AS(config.validate(), geg::DataError);
}
