#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geg/dataset.hpp"
#include "geg/metrics.hpp"
#include "geg/solver.hpp"

namespace geg {

inline constexpr const char* kToolVersion = "0.1.0";
inline constexpr int kResultsSchemaVersion = 1;

/// Cross-validated benchmark description. Exactly one of data_path /
/// synthetic supplies the dataset. All approaches share one fold plan
/// derived from the master seed.
struct ExperimentConfig {
  std::string data_path;
  std::optional<SyntheticSpec> synthetic;
  CsvSchema schema;

  std::vector<std::string> approaches = {"baseline"};  // of {baseline, geg-sp, geg-eo, geg-cp}
  int folds = 10;
  std::uint64_t seed = 0;
  GegConfig geg;          // shared solver settings; the constraint comes from the approach id
  bool emit_traces = false;
  std::string out_path;   // empty: don't write, just return the document

  void validate() const;
  nlohmann::json to_json() const;
};

nlohmann::json synthetic_spec_to_json(const SyntheticSpec& spec);
SyntheticSpec synthetic_spec_from_json(const nlohmann::json& j);

Dataset load_experiment_dataset(const ExperimentConfig& config);

/// Runs every configured approach over the shared fold plan and returns the
/// results document. Individual (approach, fold) failures are recorded in
/// the document and do not abort the remaining work. When out_path is set
/// the document is written atomically (temp file + rename).
nlohmann::json run_benchmark(const ExperimentConfig& config);

struct MetricPair {
  std::string fairness;
  std::string effectiveness;
};

/// All fairness x effectiveness combinations, the default pairing.
std::vector<MetricPair> default_metric_pairs();

/// Pareto counts per metric pair plus one-sided Wilcoxon tests (each
/// non-baseline approach against "baseline", Holm-corrected across the whole
/// invocation). Also writes one plot-ready CSV of front points per pair next
/// to out_path when it is set.
nlohmann::json emit_report(const std::vector<nlohmann::json>& results,
                           const std::vector<MetricPair>& pairs, const std::string& out_path,
                           double alpha = 0.05);

/// Generates a synthetic dataset and writes it in load_csv's format.
void synth_command(const SyntheticSpec& spec, std::uint64_t seed, const std::string& out_path);

void write_text_atomic(const std::string& text, const std::string& path);
void write_json_atomic(const nlohmann::json& j, const std::string& path);

std::string iso_timestamp();

}  // namespace geg
