#include "geg/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "geg/random.hpp"

namespace geg {

namespace {

std::vector<std::string> default_names(const std::string& prefix, int count) {
  std::vector<std::string> names;
  names.reserve(count);
  for (int i = 0; i < count; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

}  // namespace

Dataset Dataset::create(Eigen::MatrixXd features, std::vector<int> groups,
                        std::vector<int> labels, int positive_label,
                        std::vector<std::string> feature_names,
                        std::vector<std::string> group_names,
                        std::vector<std::string> class_names) {
  const auto n = static_cast<std::size_t>(features.rows());
  if (n == 0) throw DataError("dataset must contain at least one row");
  if (groups.size() != n || labels.size() != n) {
    throw DataError("features, groups and labels must have identical length");
  }
  if (!features.allFinite()) throw DataError("features contain non-finite values");

  int num_groups = 0;
  for (int g : groups) {
    if (g < 0) throw DataError("negative group id");
    num_groups = std::max(num_groups, g + 1);
  }
  std::vector<bool> seen_group(num_groups, false);
  for (int g : groups) seen_group[g] = true;
  for (int g = 0; g < num_groups; ++g) {
    if (!seen_group[g]) {
      throw DataError("group id " + std::to_string(g) + " never appears; ids must be dense");
    }
  }

  int num_classes = 0;
  for (int y : labels) {
    if (y < 0) throw DataError("negative class id");
    num_classes = std::max(num_classes, y + 1);
  }
  if (positive_label < 0 || positive_label >= num_classes ||
      std::find(labels.begin(), labels.end(), positive_label) == labels.end()) {
    throw DataError("positive label absent from the observed class ids");
  }

  Dataset ds;
  ds.features = std::move(features);
  ds.groups = std::move(groups);
  ds.labels = std::move(labels);
  ds.positive_label = positive_label;
  ds.num_groups = num_groups;
  ds.num_classes = num_classes;
  ds.feature_names = feature_names.empty() ? default_names("f", ds.dims()) : std::move(feature_names);
  if (group_names.empty()) {
    for (int g = 0; g < num_groups; ++g) group_names.push_back(std::to_string(g));
  }
  if (class_names.empty()) {
    for (int c = 0; c < num_classes; ++c) class_names.push_back(std::to_string(c));
  }
  if (static_cast<int>(group_names.size()) != num_groups ||
      static_cast<int>(class_names.size()) != num_classes) {
    throw DataError("name lists must match the number of groups/classes");
  }
  ds.group_names = std::move(group_names);
  ds.class_names = std::move(class_names);
  return ds;
}

Dataset Dataset::subset(const std::vector<int>& row_ids) const {
  if (row_ids.empty()) throw DataError("subset must contain at least one row");
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(row_ids.size()), features.cols());
  out.groups.reserve(row_ids.size());
  out.labels.reserve(row_ids.size());
  for (std::size_t i = 0; i < row_ids.size(); ++i) {
    const int r = row_ids[i];
    if (r < 0 || r >= rows()) throw DataError("subset row id out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = features.row(r);
    out.groups.push_back(groups[r]);
    out.labels.push_back(labels[r]);
  }
  out.positive_label = positive_label;
  out.num_groups = num_groups;
  out.num_classes = num_classes;
  out.feature_names = feature_names;
  out.group_names = group_names;
  out.class_names = class_names;
  out.label_column = label_column;
  out.sensitive_column = sensitive_column;
  return out;
}

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

double parse_double(const std::string& cell, int row, const std::string& column) {
  double value = 0.0;
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) {
    throw DataError("non-numeric feature cell '" + cell + "' in column '" + column +
                    "', data row " + std::to_string(row + 1));
  }
  return value;
}

}  // namespace

Dataset load_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw DataError("empty file '" + path + "'");
  if (!line.empty() && line.back() == '\r') line.pop_back();

  const std::vector<std::string> header = split_line(line);
  int label_col = -1;
  int sensitive_col = -1;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == schema.label_column) label_col = static_cast<int>(c);
    if (header[c] == schema.sensitive_column) sensitive_col = static_cast<int>(c);
  }
  if (label_col < 0) throw DataError("missing label column '" + schema.label_column + "'");
  if (sensitive_col < 0) {
    throw DataError("missing sensitive column '" + schema.sensitive_column + "'");
  }
  if (label_col == sensitive_col) {
    throw DataError("label and sensitive columns must differ");
  }

  std::vector<int> feature_cols;
  std::vector<std::string> feature_names;
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (static_cast<int>(c) != label_col && static_cast<int>(c) != sensitive_col) {
      feature_cols.push_back(static_cast<int>(c));
      feature_names.push_back(header[c]);
    }
  }

  std::vector<std::vector<double>> feature_rows;
  std::vector<std::string> group_values;
  std::vector<std::string> label_values;
  int row = 0;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> cells = split_line(line);
    if (cells.size() != header.size()) {
      throw DataError("row " + std::to_string(row + 1) + " has " +
                      std::to_string(cells.size()) + " cells, header has " +
                      std::to_string(header.size()));
    }
    std::vector<double> feats;
    feats.reserve(feature_cols.size());
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      feats.push_back(parse_double(cells[feature_cols[j]], row, feature_names[j]));
    }
    feature_rows.push_back(std::move(feats));
    group_values.push_back(cells[sensitive_col]);
    label_values.push_back(cells[label_col]);
    ++row;
  }
  if (row == 0) throw DataError("file '" + path + "' has a header but no data rows");

  // Dense ids in first-appearance order; the original values become names.
  auto index = [](const std::vector<std::string>& values, std::vector<std::string>& names) {
    std::map<std::string, int> ids;
    std::vector<int> out;
    out.reserve(values.size());
    for (const auto& v : values) {
      auto it = ids.find(v);
      if (it == ids.end()) {
        it = ids.emplace(v, static_cast<int>(names.size())).first;
        names.push_back(v);
      }
      out.push_back(it->second);
    }
    return out;
  };
  std::vector<std::string> group_names, class_names;
  std::vector<int> groups = index(group_values, group_names);
  std::vector<int> labels = index(label_values, class_names);

  const auto pos_it = std::find(class_names.begin(), class_names.end(), schema.positive_value);
  if (pos_it == class_names.end()) {
    throw DataError("positive label absent: value '" + schema.positive_value +
                    "' never occurs in column '" + schema.label_column + "'");
  }
  const int positive_label = static_cast<int>(pos_it - class_names.begin());

  Eigen::MatrixXd features(row, static_cast<Eigen::Index>(feature_cols.size()));
  for (int i = 0; i < row; ++i) {
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      features(i, static_cast<Eigen::Index>(j)) = feature_rows[i][j];
    }
  }

  Dataset ds = Dataset::create(std::move(features), std::move(groups), std::move(labels),
                               positive_label, std::move(feature_names),
                               std::move(group_names), std::move(class_names));
  ds.label_column = schema.label_column;
  ds.sensitive_column = schema.sensitive_column;
  return ds;
}

void write_csv(const Dataset& dataset, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write '" + path + "'");

  for (int j = 0; j < dataset.dims(); ++j) out << dataset.feature_names[j] << ',';
  out << dataset.sensitive_column << ',' << dataset.label_column << '\n';

  char buf[64];
  for (int i = 0; i < dataset.rows(); ++i) {
    for (int j = 0; j < dataset.dims(); ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", dataset.features(i, j));
      out << buf << ',';
    }
    out << dataset.group_names[dataset.groups[i]] << ','
        << dataset.class_names[dataset.labels[i]] << '\n';
  }
  if (!out) throw DataError("write failed for '" + path + "'");
}

std::vector<int> FoldPlan::test_rows(int fold) const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] == fold) rows.push_back(static_cast<int>(i));
  }
  return rows;
}

std::vector<int> FoldPlan::train_rows(int fold) const {
  std::vector<int> rows;
  for (std::size_t i = 0; i < assignments.size(); ++i) {
    if (assignments[i] != fold) rows.push_back(static_cast<int>(i));
  }
  return rows;
}

FoldPlan kfold_split(int n_rows, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("fold count must be at least 2");
  if (k > n_rows) throw DataError("fold count exceeds the number of rows");

  std::mt19937_64 gen(seed);
  const std::vector<int> order = rng::permutation(n_rows, gen);

  // Deal the shuffled rows into k contiguous chunks; the first (n mod k)
  // folds take one extra row.
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  plan.assignments.assign(n_rows, -1);
  const int base = n_rows / k;
  const int extra = n_rows % k;
  int cursor = 0;
  for (int fold = 0; fold < k; ++fold) {
    const int size = base + (fold < extra ? 1 : 0);
    for (int i = 0; i < size; ++i) plan.assignments[order[cursor++]] = fold;
  }
  return plan;
}

FoldPlan kfold_split(const Dataset& dataset, int k, std::uint64_t seed) {
  return kfold_split(dataset.rows(), k, seed);
}

void SyntheticSpec::validate() const {
  if (n < 1) throw DataError("synthetic spec: n must be at least 1");
  if (d < 1) throw DataError("synthetic spec: d must be at least 1");
  if (num_classes < 2) throw DataError("synthetic spec: need at least 2 classes");
  if (!(group_share > 0.0 && group_share < 1.0)) {
    throw DataError("synthetic spec: group_share must lie in (0,1)");
  }
  if (positive_rate_per_group.size() != 2 || !positive_rate_per_group.count(0) ||
      !positive_rate_per_group.count(1)) {
    throw DataError("synthetic spec: positive_rate_per_group must map groups 0 and 1");
  }
  for (const auto& [g, p] : positive_rate_per_group) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw DataError("synthetic spec: invalid probability for group " + std::to_string(g));
    }
  }
  if (!(noise_scale >= 0.0)) throw DataError("synthetic spec: noise_scale must be >= 0");
}

Dataset generate_synthetic(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  const int n = spec.n;
  const int d = spec.d;
  const int k = spec.num_classes;
  const int y_p = 0;

  std::mt19937_64 gen(seed);
  std::vector<int> groups(n), labels(n);

  auto draw_label = [&](int group) {
    const double rate = spec.positive_rate_per_group.at(group);
    if (rng::uniform(gen) < rate) return y_p;
    return 1 + static_cast<int>(rng::below(gen, static_cast<std::uint64_t>(k - 1)));
  };

  for (int i = 0; i < n; ++i) {
    if (i < k) {
      // Pin the first rows so group and class ids appear in id order; this
      // keeps load_csv's first-appearance indexing a no-op on written files.
      groups[i] = 0;
      labels[i] = i;
    } else if (i == k) {
      groups[i] = 1;
      labels[i] = draw_label(1);
    } else {
      groups[i] = rng::uniform(gen) < spec.group_share ? 1 : 0;
      labels[i] = draw_label(groups[i]);
    }
  }

  Eigen::MatrixXd features(n, d);
  for (int i = 0; i < n; ++i) {
    const int y = labels[i];
    const int g = groups[i];
    Eigen::VectorXd center = Eigen::VectorXd::Zero(d);
    center(0) = (y == y_p) ? 1.0 : -1.0 - 0.45 * (y - 1);
    if (d >= 2) center(1) = g == 1 ? 0.8 : -0.8;
    if (d >= 3 && y != y_p) center(2) = (y % 2 == 0 ? 0.9 : -0.9);
    for (int j = 0; j < d; ++j) {
      features(i, j) = center(j) + spec.noise_scale * rng::normal(gen);
    }
  }

  return Dataset::create(std::move(features), std::move(groups), std::move(labels), y_p);
}

}  // namespace geg
