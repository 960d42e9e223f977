#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <fstream>
#include <vector>

#include "stackliver/rng.hpp"
#include "stackliver/tabular.hpp"

namespace testing {

using stackliver::Column;
using stackliver::ColumnKind;
using stackliver::Frame;
using stackliver::Rng;
using stackliver::Schema;

inline Column numeric_column(const std::string& name, std::vector<double> values,
                             std::vector<int> missing = {}) {
  Column col;
  col.name = name;
  col.kind = ColumnKind::Numeric;
  col.values = Eigen::Map<Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
  col.missing.assign(values.size(), 0);
  for (const int i : missing) col.missing[static_cast<std::size_t>(i)] = 1;
  return col;
}

inline Column categorical_column(const std::string& name, const std::vector<std::string>& cells,
                                 std::vector<int> missing = {}) {
  Column col;
  col.name = name;
  col.kind = ColumnKind::Categorical;
  col.values.resize(static_cast<Eigen::Index>(cells.size()));
  col.missing.assign(cells.size(), 0);
  for (const int i : missing) col.missing[static_cast<std::size_t>(i)] = 1;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (col.missing[i]) continue;
    auto it = std::find(col.dict.begin(), col.dict.end(), cells[i]);
    if (it == col.dict.end()) {
      col.dict.push_back(cells[i]);
      it = col.dict.end() - 1;
    }
    col.values[static_cast<Eigen::Index>(i)] = static_cast<double>(it - col.dict.begin());
  }
  return col;
}

inline Column label_column(const std::string& name, std::vector<int> labels) {
  Column col;
  col.name = name;
  col.kind = ColumnKind::Label;
  col.values.resize(static_cast<Eigen::Index>(labels.size()));
  col.missing.assign(labels.size(), 0);
  for (std::size_t i = 0; i < labels.size(); ++i)
    col.values[static_cast<Eigen::Index>(i)] = labels[i];
  return col;
}

inline Frame make_frame(std::vector<Column> columns) {
  Schema schema;
  for (const auto& col : columns) schema.columns.push_back({col.name, col.kind});
  return Frame(std::move(schema), std::move(columns));
}

// Two spherical Gaussian blobs, class 1 shifted by `separation` along every axis.
inline std::pair<Eigen::MatrixXd, Eigen::VectorXi> make_blobs(int n, int d, double separation,
                                                              std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd X(n, d);
  Eigen::VectorXi y(n);
  for (int i = 0; i < n; ++i) {
    y[i] = i % 2;
    for (int j = 0; j < d; ++j) X(i, j) = rng.normal() + (y[i] == 1 ? separation : 0.0);
  }
  return {X, y};
}

// Gaussian-mixture fixture with raw labels in {1, 2}: two clusters per class
// over five markers, slight class imbalance, optional Gender column and
// sprinkled missing cells to exercise the cleaning path.
inline void write_synthetic_csv(const std::string& path, int n, std::uint64_t seed,
                                bool with_categorical, bool with_missing) {
  Rng rng(seed);
  std::ofstream out(path, std::ios::binary);
  out << "feat_1,feat_2,feat_3,feat_4,feat_5";
  if (with_categorical) out << ",Gender";
  out << ",Result\n";
  for (int i = 0; i < n; ++i) {
    const int cls = rng.next_double() < 0.45 ? 1 : 0;
    const int component = static_cast<int>(rng.below(2));
    double mean[5] = {0, 0, 0, 0, 0};
    if (cls == 0 && component == 1) {
      mean[0] = 1.5;
      mean[1] = -1.5;
      mean[2] = 0.5;
    } else if (cls == 1 && component == 0) {
      mean[0] = 3.2;
      mean[1] = 2.6;
      mean[2] = 1.2;
    } else if (cls == 1 && component == 1) {
      mean[0] = 5.0;
      mean[1] = 0.8;
      mean[2] = 2.0;
    }
    for (int j = 0; j < 5; ++j) {
      const bool hole = with_missing && rng.next_double() < 0.01;
      if (!hole) out << (mean[j] + rng.normal());
      out << ',';
    }
    if (with_categorical) {
      const bool hole = with_missing && rng.next_double() < 0.02;
      if (!hole) out << (rng.next_double() < 0.5 ? "Female" : "Male");
      out << ',';
    }
    out << (cls + 1) << '\n';
  }
}

}  // namespace testing
