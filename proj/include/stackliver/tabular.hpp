#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace stackliver {

enum class ColumnKind { Numeric, Categorical, Label };

const char* column_kind_name(ColumnKind kind);
ColumnKind column_kind_from_name(const std::string& name);

struct SchemaColumn {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
};

struct Schema {
  std::vector<SchemaColumn> columns;
  int label_positive = 1;

  // Exactly one label column; names unique and non-empty.
  void validate() const;
  const SchemaColumn& label() const;
  std::vector<std::string> predictor_names() const;
  std::vector<std::string> numeric_predictor_names() const;
};

// One column of a Frame. Numeric and label cells live directly in `values`;
// categorical cells store dictionary codes in `values`, with `dict` mapping
// code -> text.
struct Column {
  std::string name;
  ColumnKind kind = ColumnKind::Numeric;
  Eigen::VectorXd values;
  std::vector<std::uint8_t> missing;  // 1 = missing; aligned with values
  std::vector<std::string> dict;      // categorical only

  bool is_missing(Eigen::Index row) const { return missing[static_cast<std::size_t>(row)] != 0; }
  Eigen::Index size() const { return values.size(); }
  Eigen::Index missing_count() const;
  bool any_missing() const { return missing_count() > 0; }
  const std::string& text(Eigen::Index row) const;  // categorical cells only
};

// Column-oriented immutable table. Operations elsewhere take a Frame and
// return a new one; columns are indexed by name in O(1).
class Frame {
 public:
  Frame() = default;
  Frame(Schema schema, std::vector<Column> columns);

  Eigen::Index n_rows() const { return n_rows_; }
  const Schema& schema() const { return schema_; }
  const std::vector<Column>& columns() const { return columns_; }

  bool has_column(const std::string& name) const { return index_.count(name) > 0; }
  std::size_t column_index(const std::string& name) const;  // UnknownColumn
  const Column& column(const std::string& name) const { return columns_[column_index(name)]; }
  const Column& label_column() const;

  // Label values as integers. Requires no missing labels.
  Eigen::VectorXi labels() const;

  // Dense matrix of the named columns, in the given order. Requires the
  // columns to be fully observed (HasMissing otherwise).
  Eigen::MatrixXd matrix(const std::vector<std::string>& features) const;

  Frame select_rows(const std::vector<Eigen::Index>& rows) const;
  Frame drop_columns(const std::vector<std::string>& names) const;
  Frame replace_column(std::size_t index, Column column) const;

  static Frame concat_rows(const Frame& a, const Frame& b);

 private:
  Schema schema_;
  std::vector<Column> columns_;
  std::unordered_map<std::string, std::size_t> index_;
  Eigen::Index n_rows_ = 0;
};

struct CsvOptions {
  std::vector<std::string> missing_tokens = {"", "NA", "NaN", "null"};
  // Maps file header names to schema names (applied after trimming).
  std::unordered_map<std::string, std::string> aliases;
};

// RFC-4180 CSV with a header row. Cells equal to a missing token, or failing
// numeric parse in a numeric/label column, are flagged missing.
Frame read_csv(const std::string& path, const Schema& schema, const CsvOptions& options = {});

// Writes all columns in schema order. Floats use the shortest decimal form
// that round-trips; missing cells become empty fields.
void write_csv(const Frame& frame, const std::string& path);

struct ColumnSummary {
  Eigen::Index count = 0;    // non-missing cells
  Eigen::Index missing = 0;
  // NaN when count == 0.
  double mean, std_dev, min, max, q1, median, q3;
};

ColumnSummary column_summary(const Frame& frame, const std::string& name);

// Raw parsed CSV (header + text cells), for callers that need file content
// without a full Schema (e.g. inference on feature-only files).
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

CsvTable read_csv_raw(const std::string& path);

}  // namespace stackliver
