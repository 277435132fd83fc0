#include "geg/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <set>

#include "geg/log.hpp"

namespace geg {

namespace {

const std::set<std::string> kKnownApproaches = {"baseline", "geg-sp", "geg-eo", "geg-cp"};

ConstraintKind approach_constraint(const std::string& approach) {
  if (approach == "geg-sp") return ConstraintKind::DemographicParity;
  if (approach == "geg-eo") return ConstraintKind::EqualizedOdds;
  if (approach == "geg-cp") return ConstraintKind::CombinedParity;
  throw DataError("approach '" + approach + "' has no constraint system");
}

}  // namespace

void ExperimentConfig::validate() const {
  if (approaches.empty()) throw DataError("experiment: at least one approach required");
  for (const auto& a : approaches) {
    if (!kKnownApproaches.count(a)) {
      throw DataError("experiment: unknown approach '" + a +
                      "' (expected baseline, geg-sp, geg-eo or geg-cp)");
    }
  }
  if (folds < 2) throw DataError("experiment: folds must be at least 2");
  if (data_path.empty() == !synthetic.has_value()) {
    throw DataError("experiment: provide exactly one of a data path or a synthetic spec");
  }
  geg.validate();
}

nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec) {
  nlohmann::json j;
  j["n"] = spec.n;
  j["d"] = spec.d;
  j["k"] = spec.num_classes;
  j["group_share"] = spec.group_share;
  nlohmann::json rates;
  for (const auto& [g, p] : spec.positive_rate_per_group) rates[std::to_string(g)] = p;
  j["positive_rate_per_group"] = std::move(rates);
  j["noise_scale"] = spec.noise_scale;
  return j;
}

SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j) {
  SyntheticSpec spec;
  spec.n = j.at("n").get<int>();
  spec.d = j.value("d", 2);
  spec.num_classes = j.value("k", 2);
  spec.group_share = j.value("group_share", 0.5);
  spec.noise_scale = j.value("noise_scale", 1.0);
  if (j.contains("positive_rate_per_group")) {
    spec.positive_rate_per_group.clear();
    for (const auto& [key, value] : j.at("positive_rate_per_group").items()) {
      spec.positive_rate_per_group[std::stoi(key)] = value.get<double>();
    }
  }
  spec.validate();
  return spec;
}

Dataset load_experiment_dataset(const ExperimentConfig& config) {
  if (!config.data_path.empty()) return load_csv(config.data_path, config.schema);
  return generate_synthetic(*config.synthetic, config.seed);
}

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  if (!data_path.empty()) {
    j["data_path"] = data_path;
    j["schema"] = {{"label", schema.label_column},
                   {"sensitive", schema.sensitive_column},
                   {"positive", schema.positive_value}};
  }
  if (synthetic) j["synthetic"] = synthetic_spec_to_json(*synthetic);
  j["approaches"] = approaches;
  j["folds"] = folds;
  j["seed"] = seed;
  j["geg"] = {{"eta", geg.eta},
              {"delta", geg.delta},
              {"nu", geg.nu},
              {"max_iter", geg.max_iter},
              {"t_min", geg.t_min},
              {"eps_default", geg.eps_default},
              {"predict", geg.prediction_mode == PredictionMode::ExpectedVote ? "vote" : "sample"},
              {"oracle",
               {{"l2", geg.oracle.l2},
                {"max_epochs", geg.oracle.max_epochs},
                {"tol", geg.oracle.tol},
                {"step", geg.oracle.step},
                {"seed", geg.oracle.seed}}}};
  j["emit_traces"] = emit_traces;
  return j;
}

namespace {

MetricsReport evaluate_predictions(const std::vector<int>& predictions, const Dataset& test) {
  MetricsReport report;
  report.effectiveness = compute_effectiveness(predictions, test.labels, test.num_classes);
  report.fairness = compute_fairness(predictions, test.labels, test.groups, test.positive_label,
                                     test.num_classes);
  return report;
}

nlohmann::json summarize(const nlohmann::json& runs) {
  // Per-approach mean and population standard deviation over the folds that
  // completed; recomputable exactly from the stored per-fold values.
  std::map<std::string, std::map<std::string, std::vector<double>>> values;
  for (const auto& run : runs) {
    if (!run.at("error").is_null()) continue;
    const std::string approach = run.at("approach").get<std::string>();
    for (const auto& metric : effectiveness_metric_names()) {
      values[approach][metric].push_back(run.at("metrics").at(metric).get<double>());
    }
    for (const auto& metric : fairness_metric_names()) {
      values[approach][metric].push_back(run.at("metrics").at(metric).get<double>());
    }
  }

  nlohmann::json summary;
  for (const auto& [approach, metrics] : values) {
    nlohmann::json mean, std_dev;
    int n_folds = 0;
    for (const auto& [metric, xs] : metrics) {
      n_folds = static_cast<int>(xs.size());
      double m = 0.0;
      for (double x : xs) m += x;
      m /= xs.size();
      double var = 0.0;
      for (double x : xs) var += (x - m) * (x - m);
      var /= xs.size();
      mean[metric] = m;
      std_dev[metric] = std::sqrt(var);
    }
    summary[approach] = {{"n_folds", n_folds}, {"mean", mean}, {"std", std_dev}};
  }
  return summary;
}

}  // namespace

nlohmann::json run_benchmark(const ExperimentConfig& config) {
  config.validate();
  const Dataset dataset = load_experiment_dataset(config);
  const FoldPlan plan = kfold_split(dataset, config.folds, config.seed);

  nlohmann::json doc;
  doc["schema_version"] = kResultsSchemaVersion;
  doc["tool"] = "geg";
  doc["tool_version"] = kToolVersion;
  doc["created_at"] = iso_timestamp();
  doc["config"] = config.to_json();
  doc["fold_plan"] = {{"k", plan.k}, {"seed", plan.seed}, {"assignments", plan.assignments}};

  nlohmann::json runs = nlohmann::json::array();
  for (const std::string& approach : config.approaches) {
    for (int fold = 0; fold < config.folds; ++fold) {
      nlohmann::json entry;
      entry["approach"] = approach;
      entry["fold"] = fold;
      entry["error"] = nullptr;
      try {
        const Dataset train = dataset.subset(plan.train_rows(fold));
        const Dataset test = dataset.subset(plan.test_rows(fold));

        std::vector<int> predictions;
        if (approach == "baseline") {
          const SoftmaxClassifier model =
              fit_softmax(train.features, train.labels,
                          Eigen::VectorXd::Ones(train.rows()), config.geg.oracle,
                          train.num_classes);
          predictions = model.predict(test.features);
        } else {
          GegConfig geg_config = config.geg;
          geg_config.constraint = approach_constraint(approach);
          const std::vector<int> conditioning =
              geg_config.conditioning_labels.empty()
                  ? std::vector<int>{train.positive_label}
                  : geg_config.conditioning_labels;
          const ConstraintSystem system = build_constraint_system(
              geg_config.constraint, train.num_groups, conditioning, geg_config.eps_default);
          const FitResult fitted = fit(train, system, geg_config);
          predictions =
              mixture_predict(fitted.mixture, test.features, geg_config.prediction_mode,
                              geg_config.sample_seed + static_cast<std::uint64_t>(fold));
          if (config.emit_traces) {
            nlohmann::json trace = nlohmann::json::array();
            for (const auto& rec : fitted.trace) {
              trace.push_back(
                  {{"t", rec.t},
                   {"lambda", std::vector<double>(rec.lambda.data(),
                                                  rec.lambda.data() + rec.lambda.size())},
                   {"risk", rec.risk},
                   {"violations",
                    std::vector<double>(rec.violations.data(),
                                        rec.violations.data() + rec.violations.size())},
                   {"lagrangian", rec.lagrangian_value},
                   {"gap", rec.gap}});
            }
            entry["trace"] = std::move(trace);
          }
        }
        entry["metrics"] = evaluate_predictions(predictions, test).to_json();
      } catch (const std::exception& e) {
        entry["error"] = std::string(e.what());
        log::warn("benchmark: " + approach + " fold " + std::to_string(fold) +
                  " failed: " + e.what());
      }
      runs.push_back(std::move(entry));
    }
  }
  doc["runs"] = std::move(runs);
  doc["summary"] = summarize(doc["runs"]);

  if (!config.out_path.empty()) write_json_atomic(doc, config.out_path);
  return doc;
}

std::vector<MetricPair> default_metric_pairs() {
  std::vector<MetricPair> pairs;
  for (const auto& fair : fairness_metric_names()) {
    for (const auto& eff : effectiveness_metric_names()) pairs.push_back({fair, eff});
  }
  return pairs;
}

namespace {

struct RunValue {
  std::string approach;
  int fold = 0;
  MetricsReport metrics;
};

std::vector<RunValue> collect_runs(const std::vector<nlohmann::json>& results) {
  std::vector<RunValue> runs;
  for (const auto& doc : results) {
    for (const auto& run : doc.at("runs")) {
      if (!run.at("error").is_null()) continue;
      runs.push_back({run.at("approach").get<std::string>(), run.at("fold").get<int>(),
                      MetricsReport::from_json(run.at("metrics"))});
    }
  }
  if (runs.empty()) throw DataError("report: no successful runs in the given results");
  return runs;
}

std::string csv_path_for_pair(const std::string& out_path, const MetricPair& pair) {
  std::string stem = out_path;
  const auto dot = stem.rfind('.');
  if (dot != std::string::npos && stem.find('/', dot) == std::string::npos) {
    stem = stem.substr(0, dot);
  }
  return stem + ".front_" + pair.fairness + "_" + pair.effectiveness + ".csv";
}

}  // namespace

nlohmann::json emit_report(const std::vector<nlohmann::json>& results,
                           const std::vector<MetricPair>& pairs, const std::string& out_path,
                           double alpha) {
  const std::vector<RunValue> runs = collect_runs(results);

  nlohmann::json doc;
  doc["schema_version"] = kResultsSchemaVersion;
  doc["tool_version"] = kToolVersion;
  doc["created_at"] = iso_timestamp();
  doc["alpha"] = alpha;
  doc["holm_family"] =
      "all (approach, baseline, metric) one-sided tests within this report invocation";

  // Pareto counting over every successful (approach, fold) point.
  nlohmann::json pareto = nlohmann::json::array();
  for (const MetricPair& pair : pairs) {
    std::vector<SolutionPoint> points;
    points.reserve(runs.size());
    for (const RunValue& run : runs) {
      points.push_back({run.approach, run.fold, run.metrics.value(pair.effectiveness),
                        run.metrics.value(pair.fairness)});
    }
    const ParetoResult front = pareto_front(points);

    nlohmann::json entry;
    entry["fairness_metric"] = pair.fairness;
    entry["effectiveness_metric"] = pair.effectiveness;
    entry["counts"] = front.counts;
    nlohmann::json front_points = nlohmann::json::array();
    std::set<int> on_front(front.front_indices.begin(), front.front_indices.end());
    for (int idx : front.front_indices) {
      front_points.push_back({{"approach", points[idx].approach},
                              {"fold", points[idx].fold},
                              {"effectiveness", points[idx].effectiveness},
                              {"fairness", points[idx].fairness}});
    }
    entry["front"] = std::move(front_points);
    pareto.push_back(std::move(entry));

    if (!out_path.empty()) {
      std::string csv = "approach,fold," + pair.effectiveness + "," + pair.fairness + ",on_front\n";
      char buf[64];
      for (std::size_t i = 0; i < points.size(); ++i) {
        csv += points[i].approach + ',' + std::to_string(points[i].fold) + ',';
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g", points[i].effectiveness,
                      points[i].fairness);
        csv += buf;
        csv += on_front.count(static_cast<int>(i)) ? ",1\n" : ",0\n";
      }
      write_text_atomic(csv, csv_path_for_pair(out_path, pair));
    }
  }
  doc["pareto"] = std::move(pareto);

  // Paired one-sided tests of every other approach against "baseline":
  // higher is better for effectiveness, lower for fairness.
  std::map<std::string, std::map<int, const MetricsReport*>> by_approach;
  for (const RunValue& run : runs) by_approach[run.approach][run.fold] = &run.metrics;

  nlohmann::json tests = nlohmann::json::array();
  std::vector<double> pvalues;
  if (by_approach.count("baseline")) {
    const auto& baseline_folds = by_approach.at("baseline");
    for (const auto& [approach, folds] : by_approach) {
      if (approach == "baseline") continue;
      {
        std::set<int> a_folds, b_folds;
        for (const auto& [fold, _] : folds) a_folds.insert(fold);
        for (const auto& [fold, _] : baseline_folds) b_folds.insert(fold);
        if (a_folds != b_folds) {
          throw DataError("report: approach '" + approach +
                          "' and baseline cover different folds; paired tests need matching "
                          "fold structure");
        }
      }
      auto run_tests = [&](const std::vector<std::string>& metrics, TestDirection direction) {
        for (const std::string& metric : metrics) {
          std::vector<double> x, y;
          for (const auto& [fold, report] : folds) {
            x.push_back(report->value(metric));
            y.push_back(baseline_folds.at(fold)->value(metric));
          }
          nlohmann::json test;
          test["approach"] = approach;
          test["baseline"] = "baseline";
          test["metric"] = metric;
          test["direction"] = direction == TestDirection::Greater ? "greater" : "less";
          try {
            const double p = wilcoxon_one_sided(x, y, direction);
            test["p_value"] = p;
            pvalues.push_back(p);
          } catch (const DataError& e) {
            test["p_value"] = nullptr;
            test["note"] = std::string(e.what());
          }
          tests.push_back(std::move(test));
        }
      };
      run_tests(effectiveness_metric_names(), TestDirection::Greater);
      run_tests(fairness_metric_names(), TestDirection::Less);
    }
  }

  if (!pvalues.empty()) {
    const HolmResult holm = holm_bonferroni(pvalues, alpha);
    std::size_t cursor = 0;
    for (auto& test : tests) {
      if (test.at("p_value").is_null()) continue;
      test["p_adjusted"] = holm.adjusted[cursor];
      test["reject"] = holm.reject[cursor];
      ++cursor;
    }
  }
  doc["tests"] = std::move(tests);

  if (!out_path.empty()) write_json_atomic(doc, out_path);
  return doc;
}

void synth_command(const SyntheticSpec& spec, std::uint64_t seed, const std::string& out_path) {
  const Dataset dataset = generate_synthetic(spec, seed);
  write_csv(dataset, out_path);
}

void write_text_atomic(const std::string& text, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw DataError("cannot write '" + tmp + "'");
    out << text;
    if (!out) throw DataError("write failed for '" + tmp + "'");
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    throw DataError("cannot move '" + tmp + "' to '" + path + "'");
  }
}

void write_json_atomic(const nlohmann::json& j, const std::string& path) {
  write_text_atomic(j.dump(2) + "\n", path);
}

std::string iso_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace geg
