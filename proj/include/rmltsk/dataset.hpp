/*   Copyright 2026 The rmltsk Authors

   Licensed under the Apache License, Version 2.0 (the "License");
   you may not use this file except in compliance with the License.
   You may obtain a copy of the License at

       http://www.apache.org/licenses/LICENSE-2.0

   Unless required by applicable law or agreed to in writing, software
   distributed under the License is distributed on an "AS IS" BASIS,
   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
   See the License for the specific language governing permissions and
   limitations under the License.
 */
#pragma once

// Multilabel datasets stored column-per-sample: features are D x N, labels L x N.
// On disk both matrices are sample-major CSV (one sample per row) with an
// optional '#'-prefixed header line listing names.

#include "rmltsk/common.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace rmltsk {

struct Dataset {
  Matrix features;  // D x N
  Matrix labels;    // L x N, entries exactly 0 or 1
  std::vector<std::string> feature_names;
  std::vector<std::string> label_names;

  Index n_samples() const { return features.cols(); }
  Index n_features() const { return features.rows(); }
  Index n_labels() const { return labels.rows(); }
};

struct NormStats {
  Vector min;
  Vector max;
};

struct FoldPlan {
  int k = 0;
  std::vector<int> assignments;  // fold index per sample

  std::vector<Index> test_indices(int fold) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] == fold) out.push_back(static_cast<Index>(i));
    return out;
  }
  std::vector<Index> train_indices(int fold) const {
    std::vector<Index> out;
    for (std::size_t i = 0; i < assignments.size(); ++i)
      if (assignments[i] != fold) out.push_back(static_cast<Index>(i));
    return out;
  }
};

inline std::vector<std::string> default_names(const std::string& prefix, Index n) {
  std::vector<std::string> names;
  names.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) names.push_back(prefix + std::to_string(i + 1));
  return names;
}

// Throws DataError if the invariants do not hold.
inline void validate(const Dataset& d) {
  if (d.n_features() < 1) throw DataError("dataset has no features");
  if (d.n_labels() < 1) throw DataError("dataset has no labels");
  if (d.features.cols() < 1) throw DataError("dataset has no samples");
  if (d.features.cols() != d.labels.cols()) throw DataError("sample count mismatch");
  for (Index j = 0; j < d.labels.cols(); ++j)
    for (Index i = 0; i < d.labels.rows(); ++i) {
      const double v = d.labels(i, j);
      if (v != 0.0 && v != 1.0) throw DataError("non-binary label");
    }
  if (static_cast<Index>(d.feature_names.size()) != d.n_features())
    throw DataError("feature name count does not match feature dimension");
  if (static_cast<Index>(d.label_names.size()) != d.n_labels())
    throw DataError("label name count does not match label dimension");
}

namespace detail {

struct CsvTable {
  std::vector<std::string> names;
  std::vector<std::vector<double>> rows;
};

inline CsvTable read_csv(const std::string& path, const char* cell_error) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open file: " + path);
  CsvTable table;
  std::string line;
  bool first = true;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string_view view = trim(line);
    if (first && lineno == 1 && view.size() >= 3 && static_cast<unsigned char>(view[0]) == 0xEF)
      view.remove_prefix(3);  // UTF-8 BOM
    if (view.empty()) continue;
    if (first && view.front() == '#') {
      view.remove_prefix(1);
      for (auto name : split(view, ',')) table.names.emplace_back(trim(name));
      first = false;
      continue;
    }
    first = false;
    std::vector<double> row;
    for (auto cell : split(view, ','))
      row.push_back(parse_real_or_throw(cell, std::string(cell_error) + " (" + path + ":" +
                                                  std::to_string(lineno) + ")"));
    if (!table.rows.empty() && row.size() != table.rows.front().size())
      throw DataError("ragged row in " + path + " at line " + std::to_string(lineno));
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) throw DataError("empty file: " + path);
  if (!table.names.empty() && table.names.size() != table.rows.front().size())
    throw DataError("header name count does not match column count in " + path);
  return table;
}

inline Matrix to_column_major(const CsvTable& t) {
  const auto n = static_cast<Index>(t.rows.size());
  const auto d = static_cast<Index>(t.rows.front().size());
  Matrix m(d, n);
  for (Index i = 0; i < n; ++i)
    for (Index r = 0; r < d; ++r) m(r, i) = t.rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
  return m;
}

inline void write_csv(const std::string& path, const Matrix& column_major,
                      const std::vector<std::string>& names) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write file: " + path);
  if (!names.empty()) {
    out << '#';
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << '\n';
  }
  for (Index i = 0; i < column_major.cols(); ++i) {
    for (Index r = 0; r < column_major.rows(); ++r)
      out << (r ? "," : "") << format_real(column_major(r, i));
    out << '\n';
  }
  if (!out) throw DataError("write failed: " + path);
}

}  // namespace detail

// Reads a sample-major matrix file (rows are samples) into a column-per-sample matrix.
inline Matrix load_matrix_csv(const std::string& path, std::vector<std::string>* names = nullptr) {
  auto table = detail::read_csv(path, "non-numeric cell");
  if (names) *names = table.names;
  return detail::to_column_major(table);
}

inline void save_matrix_csv(const std::string& path, const Matrix& column_major,
                            const std::vector<std::string>& names = {}) {
  detail::write_csv(path, column_major, names);
}

inline Dataset load_dataset(const std::string& features_path, const std::string& labels_path) {
  auto ft = detail::read_csv(features_path, "non-numeric feature cell");
  auto lt = detail::read_csv(labels_path, "non-numeric label cell");
  if (ft.rows.size() != lt.rows.size())
    throw DataError("sample count mismatch: " + std::to_string(ft.rows.size()) + " feature rows vs " +
                    std::to_string(lt.rows.size()) + " label rows");
  for (const auto& row : lt.rows)
    for (double v : row)
      if (v != 0.0 && v != 1.0) throw DataError("non-binary label in " + labels_path);
  Dataset d;
  d.features = detail::to_column_major(ft);
  d.labels = detail::to_column_major(lt);
  d.feature_names = ft.names.empty() ? default_names("x", d.n_features()) : ft.names;
  d.label_names = lt.names.empty() ? default_names("y", d.n_labels()) : lt.names;
  validate(d);
  return d;
}

inline void save_dataset(const Dataset& d, const std::string& features_path,
                         const std::string& labels_path) {
  detail::write_csv(features_path, d.features, d.feature_names);
  detail::write_csv(labels_path, d.labels, d.label_names);
}

inline Dataset select_columns(const Dataset& d, const std::vector<Index>& cols) {
  Dataset out;
  out.features.resize(d.n_features(), static_cast<Index>(cols.size()));
  out.labels.resize(d.n_labels(), static_cast<Index>(cols.size()));
  for (std::size_t j = 0; j < cols.size(); ++j) {
    out.features.col(static_cast<Index>(j)) = d.features.col(cols[j]);
    out.labels.col(static_cast<Index>(j)) = d.labels.col(cols[j]);
  }
  out.feature_names = d.feature_names;
  out.label_names = d.label_names;
  return out;
}

inline NormStats fit_norm(const Matrix& features) {
  return {features.rowwise().minCoeff(), features.rowwise().maxCoeff()};
}

// Min-max maps each feature into [0,1]; constant features map to 0 and values
// outside the fitted range are clipped.
inline Matrix apply_norm(const Matrix& features, const NormStats& stats) {
  if (stats.min.size() != features.rows() || stats.max.size() != features.rows())
    throw DataError("normalization stats do not match feature dimension");
  Matrix out(features.rows(), features.cols());
  for (Index r = 0; r < features.rows(); ++r) {
    const double lo = stats.min(r);
    const double span = stats.max(r) - lo;
    for (Index c = 0; c < features.cols(); ++c) {
      if (span <= 0.0) {
        out(r, c) = 0.0;
      } else {
        out(r, c) = std::clamp((features(r, c) - lo) / span, 0.0, 1.0);
      }
    }
  }
  return out;
}

inline Dataset apply_norm(const Dataset& d, const NormStats& stats) {
  Dataset out = d;
  out.features = apply_norm(d.features, stats);
  return out;
}

inline std::pair<Dataset, NormStats> normalize_features(const Dataset& train) {
  auto stats = fit_norm(train.features);
  return {apply_norm(train, stats), stats};
}

// Seeded uniform shuffle, then round-robin fold assignment along the shuffled order.
inline FoldPlan kfold_split(Index n, int k, std::uint64_t seed) {
  if (k < 2) throw DataError("fold count must be at least 2");
  if (k > n) throw DataError("fold count exceeds sample count");
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  FoldPlan plan;
  plan.k = k;
  plan.assignments.assign(static_cast<std::size_t>(n), 0);
  for (std::size_t pos = 0; pos < order.size(); ++pos)
    plan.assignments[static_cast<std::size_t>(order[pos])] = static_cast<int>(pos % static_cast<std::size_t>(k));
  return plan;
}

}  // namespace rmltsk
