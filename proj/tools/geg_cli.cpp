// Command-line front end: synthetic data generation, single solver runs,
// cross-validated benchmarks, and Pareto / significance reports.

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

#include "geg/experiment.hpp"
#include "geg/log.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitSolver = 3;

struct CommonOptions {
  std::string data_path;
  std::string synthetic_path;
  std::string label_column = "label";
  std::string sensitive_column = "group";
  std::string positive_value = "0";
  std::uint64_t seed = 0;
  std::string out_path;
};

void add_dataset_flags(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--data", opts.data_path, "CSV dataset path");
  cmd->add_option("--synthetic", opts.synthetic_path, "synthetic spec JSON path");
  cmd->add_option("--label", opts.label_column, "label column name");
  cmd->add_option("--sensitive", opts.sensitive_column, "sensitive attribute column name");
  cmd->add_option("--positive", opts.positive_value, "favourable label value (matched as text)");
}

void add_solver_flags(CLI::App* cmd, geg::GegConfig& config) {
  cmd->add_option("--eta", config.eta, "dual learning rate")->capture_default_str();
  cmd->add_option("--delta", config.delta, "budget parameter (B = 1/delta)")
      ->capture_default_str();
  cmd->add_option("--nu", config.nu, "duality-gap stopping threshold")->capture_default_str();
  cmd->add_option("--max-iter", config.max_iter, "maximum solver iterations")
      ->capture_default_str();
  cmd->add_option("--t-min", config.t_min, "minimum solver iterations")->capture_default_str();
  cmd->add_option("--eps", config.eps_default, "constraint tolerance")->capture_default_str();
}

geg::SyntheticSpec read_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw geg::DataError("cannot open synthetic spec '" + path + "'");
  nlohmann::json j;
  in >> j;
  return geg::synthetic_spec_from_json(j);
}

geg::ExperimentConfig make_experiment_config(const CommonOptions& opts) {
  geg::ExperimentConfig config;
  config.data_path = opts.data_path;
  if (!opts.synthetic_path.empty()) config.synthetic = read_spec(opts.synthetic_path);
  config.schema = {opts.label_column, opts.sensitive_column, opts.positive_value};
  config.seed = opts.seed;
  config.out_path = opts.out_path;
  return config;
}

std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= csv.size()) {
    const std::size_t comma = csv.find(',', start);
    const std::string item = csv.substr(start, comma - start);
    if (!item.empty()) out.push_back(item);
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fairness-constrained classification via exponentiated-gradient training"};
  app.require_subcommand(1);

  CommonOptions opts;
  geg::GegConfig solver;
  std::string approaches = "baseline,geg-sp";
  std::string constraint = "sp";
  std::string predict = "vote";
  int folds = 10;
  bool trace = false;
  std::vector<std::string> result_paths;
  double alpha = 0.05;

  CLI::App* synth = app.add_subcommand("synth", "generate a synthetic CSV dataset");
  synth->add_option("--synthetic", opts.synthetic_path, "synthetic spec JSON path")->required();
  synth->add_option("--seed", opts.seed, "random seed");
  synth->add_option("--out", opts.out_path, "output CSV path")->required();

  CLI::App* run = app.add_subcommand("run", "fit one model on a full dataset");
  add_dataset_flags(run, opts);
  add_solver_flags(run, solver);
  run->add_option("--constraint", constraint, "fairness constraint: sp, eo or cp")
      ->capture_default_str();
  run->add_option("--predict", predict, "prediction mode: vote or sample")->capture_default_str();
  run->add_option("--seed", opts.seed, "random seed");
  run->add_flag("--trace", trace, "write the iteration trace as JSON lines");
  run->add_option("--out", opts.out_path, "output JSON path")->required();

  CLI::App* bench = app.add_subcommand("benchmark", "cross-validated comparison of approaches");
  add_dataset_flags(bench, opts);
  add_solver_flags(bench, solver);
  bench->add_option("--approaches", approaches,
                    "comma-separated subset of baseline,geg-sp,geg-eo,geg-cp")
      ->capture_default_str();
  bench->add_option("--folds", folds, "fold count")->capture_default_str();
  bench->add_option("--predict", predict, "prediction mode: vote or sample")
      ->capture_default_str();
  bench->add_option("--seed", opts.seed, "master seed shared by all approaches");
  bench->add_flag("--trace", trace, "embed iteration traces in the results file");
  bench->add_option("--out", opts.out_path, "results JSON path")->required();

  CLI::App* report = app.add_subcommand("report", "Pareto fronts and significance tests");
  report->add_option("--results", result_paths, "one or more results JSON files")->required();
  report->add_option("--alpha", alpha, "significance level")->capture_default_str();
  report->add_option("--out", opts.out_path, "report JSON path (front CSVs written alongside)")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (synth->parsed()) {
      geg::synth_command(read_spec(opts.synthetic_path), opts.seed, opts.out_path);
      std::cout << "wrote " << opts.out_path << "\n";
      return kExitOk;
    }

    if (run->parsed()) {
      solver.prediction_mode =
          predict == "sample" ? geg::PredictionMode::Sampled : geg::PredictionMode::ExpectedVote;
      geg::ExperimentConfig config = make_experiment_config(opts);
      const geg::Dataset dataset = geg::load_experiment_dataset(config);
      solver.constraint = geg::constraint_kind_from_string(constraint);
      const geg::ConstraintSystem system = geg::build_constraint_system(
          solver.constraint, dataset.num_groups, {dataset.positive_label}, solver.eps_default);

      const geg::FitResult fitted = geg::fit(dataset, system, solver);
      const std::vector<int> predictions = geg::mixture_predict(
          fitted.mixture, dataset.features, solver.prediction_mode, solver.sample_seed);

      geg::MetricsReport metrics;
      metrics.effectiveness =
          geg::compute_effectiveness(predictions, dataset.labels, dataset.num_classes);
      metrics.fairness = geg::compute_fairness(predictions, dataset.labels, dataset.groups,
                                               dataset.positive_label, dataset.num_classes);

      nlohmann::json doc;
      doc["schema_version"] = geg::kResultsSchemaVersion;
      doc["tool_version"] = geg::kToolVersion;
      doc["created_at"] = geg::iso_timestamp();
      doc["config"] = config.to_json();
      doc["config"]["constraint"] = constraint;
      doc["iterations"] = fitted.trace.size();
      doc["final_gap"] = fitted.trace.empty() ? 0.0 : fitted.trace.back().gap;
      doc["training_metrics"] = metrics.to_json();
      nlohmann::json members = nlohmann::json::array();
      for (std::size_t i = 0; i < fitted.mixture.members.size(); ++i) {
        nlohmann::json member = fitted.mixture.members[i]->to_json();
        member["count"] = fitted.mixture.counts[i];
        members.push_back(std::move(member));
      }
      doc["mixture"] = std::move(members);
      doc["warnings"] = fitted.warnings;
      geg::write_json_atomic(doc, opts.out_path);
      if (trace) {
        geg::write_text_atomic(geg::trace_to_jsonl(fitted.trace), opts.out_path + ".trace.jsonl");
      }
      std::cout << "wrote " << opts.out_path << " (" << fitted.trace.size() << " iterations)\n";
      return kExitOk;
    }

    if (bench->parsed()) {
      geg::ExperimentConfig config = make_experiment_config(opts);
      config.approaches = split_list(approaches);
      config.folds = folds;
      config.geg = solver;
      config.geg.prediction_mode =
          predict == "sample" ? geg::PredictionMode::Sampled : geg::PredictionMode::ExpectedVote;
      config.emit_traces = trace;
      geg::run_benchmark(config);
      std::cout << "wrote " << opts.out_path << "\n";
      return kExitOk;
    }

    if (report->parsed()) {
      std::vector<nlohmann::json> results;
      for (const std::string& path : result_paths) {
        std::ifstream in(path);
        if (!in) throw geg::DataError("cannot open results file '" + path + "'");
        nlohmann::json j;
        in >> j;
        results.push_back(std::move(j));
      }
      geg::emit_report(results, geg::default_metric_pairs(), opts.out_path, alpha);
      std::cout << "wrote " << opts.out_path << "\n";
      return kExitOk;
    }
  } catch (const geg::SolverError& e) {
    std::cerr << "solver error: " << e.what() << "\n";
    return kExitSolver;
  } catch (const geg::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
