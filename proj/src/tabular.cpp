#include "stackliver/tabular.hpp"

#include <algorithm>
#include <cassert>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "stackliver/error.hpp"
#include "stackliver/numerics.hpp"

namespace stackliver {

const char* column_kind_name(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::Numeric: return "numeric";
    case ColumnKind::Categorical: return "categorical";
    case ColumnKind::Label: return "label";
  }
  return "numeric";
}

ColumnKind column_kind_from_name(const std::string& name) {
  if (name == "numeric") return ColumnKind::Numeric;
  if (name == "categorical") return ColumnKind::Categorical;
  if (name == "label") return ColumnKind::Label;
  fail(ErrorCode::ConfigError, "unknown column kind '" + name + "'");
}

void Schema::validate() const {
  std::set<std::string> seen;
  int labels = 0;
  for (const auto& col : columns) {
    if (col.name.empty()) fail(ErrorCode::ConfigError, "schema has an empty column name");
    if (!seen.insert(col.name).second)
      fail(ErrorCode::ConfigError, "duplicate column name '" + col.name + "'");
    if (col.kind == ColumnKind::Label) ++labels;
  }
  if (labels != 1) fail(ErrorCode::ConfigError, "schema must have exactly one label column");
}

const SchemaColumn& Schema::label() const {
  for (const auto& col : columns)
    if (col.kind == ColumnKind::Label) return col;
  fail(ErrorCode::ConfigError, "schema has no label column");
}

std::vector<std::string> Schema::predictor_names() const {
  std::vector<std::string> names;
  for (const auto& col : columns)
    if (col.kind != ColumnKind::Label) names.push_back(col.name);
  return names;
}

std::vector<std::string> Schema::numeric_predictor_names() const {
  std::vector<std::string> names;
  for (const auto& col : columns)
    if (col.kind == ColumnKind::Numeric) names.push_back(col.name);
  return names;
}

Eigen::Index Column::missing_count() const {
  Eigen::Index count = 0;
  for (const auto flag : missing) count += (flag != 0);
  return count;
}

const std::string& Column::text(Eigen::Index row) const {
  if (kind != ColumnKind::Categorical)
    fail(ErrorCode::NonCategorical, "column '" + name + "' is not categorical");
  const auto code = static_cast<std::size_t>(values[row]);
  return dict.at(code);
}

Frame::Frame(Schema schema, std::vector<Column> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  schema_.validate();
  if (columns_.size() != schema_.columns.size())
    fail(ErrorCode::SchemaMismatch, "column count does not match schema");
  n_rows_ = columns_.empty() ? 0 : columns_.front().size();
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    auto& col = columns_[i];
    if (col.name != schema_.columns[i].name || col.kind != schema_.columns[i].kind)
      fail(ErrorCode::SchemaMismatch, "column '" + col.name + "' does not match schema order");
    if (col.size() != n_rows_) fail(ErrorCode::LengthMismatch, "ragged columns in frame");
    if (static_cast<Eigen::Index>(col.missing.size()) != n_rows_)
      fail(ErrorCode::LengthMismatch, "missing mask length mismatch in '" + col.name + "'");
    index_.emplace(col.name, i);
  }
}

std::size_t Frame::column_index(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) fail(ErrorCode::UnknownColumn, "no column named '" + name + "'");
  return it->second;
}

const Column& Frame::label_column() const { return column(schema_.label().name); }

Eigen::VectorXi Frame::labels() const {
  const Column& col = label_column();
  Eigen::VectorXi y(n_rows_);
  for (Eigen::Index i = 0; i < n_rows_; ++i) {
    if (col.is_missing(i)) fail(ErrorCode::HasMissing, "label column has missing cells");
    y[i] = static_cast<int>(col.values[i]);
  }
  return y;
}

Eigen::MatrixXd Frame::matrix(const std::vector<std::string>& features) const {
  Eigen::MatrixXd X(n_rows_, static_cast<Eigen::Index>(features.size()));
  for (std::size_t j = 0; j < features.size(); ++j) {
    const Column& col = column(features[j]);
    if (col.any_missing())
      fail(ErrorCode::HasMissing, "column '" + col.name + "' has missing cells");
    X.col(static_cast<Eigen::Index>(j)) = col.values;
  }
  return X;
}

Frame Frame::select_rows(const std::vector<Eigen::Index>& rows) const {
  std::vector<Column> out;
  out.reserve(columns_.size());
  for (const auto& col : columns_) {
    Column copy;
    copy.name = col.name;
    copy.kind = col.kind;
    copy.dict = col.dict;
    copy.values.resize(static_cast<Eigen::Index>(rows.size()));
    copy.missing.resize(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      copy.values[static_cast<Eigen::Index>(i)] = col.values[rows[i]];
      copy.missing[i] = col.missing[static_cast<std::size_t>(rows[i])];
    }
    out.push_back(std::move(copy));
  }
  return Frame(schema_, std::move(out));
}

Frame Frame::drop_columns(const std::vector<std::string>& names) const {
  std::set<std::string> drop(names.begin(), names.end());
  for (const auto& name : names) column_index(name);  // validate
  Schema schema;
  schema.label_positive = schema_.label_positive;
  std::vector<Column> cols;
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (drop.count(columns_[i].name)) continue;
    schema.columns.push_back(schema_.columns[i]);
    cols.push_back(columns_[i]);
  }
  return Frame(std::move(schema), std::move(cols));
}

Frame Frame::replace_column(std::size_t index, Column column) const {
  std::vector<Column> cols = columns_;
  Schema schema = schema_;
  schema.columns[index].name = column.name;
  schema.columns[index].kind = column.kind;
  cols[index] = std::move(column);
  return Frame(std::move(schema), std::move(cols));
}

Frame Frame::concat_rows(const Frame& a, const Frame& b) {
  if (a.columns_.size() != b.columns_.size())
    fail(ErrorCode::SchemaMismatch, "cannot concat frames with different schemas");
  std::vector<Column> cols;
  cols.reserve(a.columns_.size());
  for (std::size_t i = 0; i < a.columns_.size(); ++i) {
    const Column& ca = a.columns_[i];
    const Column& cb = b.columns_[i];
    if (ca.name != cb.name || ca.kind != cb.kind)
      fail(ErrorCode::SchemaMismatch, "cannot concat frames with different schemas");
    Column out;
    out.name = ca.name;
    out.kind = ca.kind;
    out.values.resize(ca.size() + cb.size());
    out.values << ca.values, cb.values;
    out.missing = ca.missing;
    out.missing.insert(out.missing.end(), cb.missing.begin(), cb.missing.end());
    if (ca.kind == ColumnKind::Categorical) {
      // Re-map b's codes onto a's dictionary, extending it as needed.
      out.dict = ca.dict;
      std::unordered_map<std::string, double> code_of;
      for (std::size_t c = 0; c < out.dict.size(); ++c) code_of[out.dict[c]] = static_cast<double>(c);
      for (Eigen::Index r = 0; r < cb.size(); ++r) {
        if (cb.is_missing(r)) continue;
        const std::string& text = cb.dict.at(static_cast<std::size_t>(cb.values[r]));
        auto it = code_of.find(text);
        if (it == code_of.end()) {
          it = code_of.emplace(text, static_cast<double>(out.dict.size())).first;
          out.dict.push_back(text);
        }
        out.values[ca.size() + r] = it->second;
      }
    }
    cols.push_back(std::move(out));
  }
  return Frame(a.schema_, std::move(cols));
}

namespace {

std::string trim(const std::string& s) {
  std::size_t begin = 0, end = s.size();
  while (begin < end && (s[begin] == ' ' || s[begin] == '\t' || s[begin] == '\r')) ++begin;
  while (end > begin && (s[end - 1] == ' ' || s[end - 1] == '\t' || s[end - 1] == '\r')) --end;
  return s.substr(begin, end - begin);
}

bool parse_double(const std::string& text, double& out) {
  const char* begin = text.data();
  const char* end = begin + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

std::string format_double(double value) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  assert(ec == std::errc());
  return std::string(buf, ptr);
}

// RFC-4180 record reader; quoted fields may contain commas, quotes and
// newlines. Returns one record per call, tracking the physical line number
// where the record started.
struct CsvReader {
  std::istream& in;
  long line = 0;

  bool next(std::vector<std::string>& fields, long& record_line) {
    fields.clear();
    int c = in.get();
    if (c == EOF) return false;
    ++line;
    record_line = line;
    std::string field;
    bool quoted = false;
    for (;;) {
      if (c == EOF) {
        fields.push_back(std::move(field));
        return true;
      }
      const char ch = static_cast<char>(c);
      if (quoted) {
        if (ch == '"') {
          const int peek = in.peek();
          if (peek == '"') {
            field.push_back('"');
            in.get();
          } else {
            quoted = false;
          }
        } else {
          if (ch == '\n') ++line;
          field.push_back(ch);
        }
      } else if (ch == '"' && field.empty()) {
        quoted = true;
      } else if (ch == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else if (ch == '\n') {
        if (!field.empty() && field.back() == '\r') field.pop_back();
        fields.push_back(std::move(field));
        return true;
      } else {
        field.push_back(ch);
      }
      c = in.get();
    }
  }
};

bool needs_quoting(const std::string& field) {
  return field.find_first_of(",\"\n\r") != std::string::npos;
}

void write_field(std::ostream& out, const std::string& field) {
  if (!needs_quoting(field)) {
    out << field;
    return;
  }
  out << '"';
  for (const char ch : field) {
    if (ch == '"') out << '"';
    out << ch;
  }
  out << '"';
}

}  // namespace

CsvTable read_csv_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path + "'");
  CsvReader reader{in};
  CsvTable table;
  std::vector<std::string> fields;
  long record_line = 0;
  if (!reader.next(table.header, record_line)) fail(ErrorCode::EmptyFile, "'" + path + "' is empty");
  while (reader.next(fields, record_line)) {
    if (fields.size() == 1 && fields[0].empty()) continue;  // trailing blank line
    if (fields.size() != table.header.size())
      fail(ErrorCode::RaggedRow, "'" + path + "' line " + std::to_string(record_line) + ": expected " +
                                     std::to_string(table.header.size()) + " fields, got " +
                                     std::to_string(fields.size()));
    table.rows.push_back(fields);
  }
  return table;
}

Frame read_csv(const std::string& path, const Schema& schema, const CsvOptions& options) {
  schema.validate();
  const CsvTable table = read_csv_raw(path);
  if (table.rows.empty()) fail(ErrorCode::EmptyFile, "'" + path + "' has a header but no data rows");

  // Resolve schema columns against the (aliased) header. Extra file columns
  // are ignored.
  std::unordered_map<std::string, std::size_t> header_pos;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    std::string name = trim(table.header[i]);
    const auto alias = options.aliases.find(name);
    if (alias != options.aliases.end()) name = alias->second;
    header_pos.emplace(name, i);  // first occurrence wins
  }
  std::vector<std::size_t> source(schema.columns.size());
  for (std::size_t j = 0; j < schema.columns.size(); ++j) {
    const auto it = header_pos.find(schema.columns[j].name);
    if (it == header_pos.end())
      fail(ErrorCode::MissingColumn, "column '" + schema.columns[j].name + "' not found in '" + path + "'");
    source[j] = it->second;
  }

  const std::set<std::string> missing_tokens(options.missing_tokens.begin(), options.missing_tokens.end());
  const Eigen::Index n = static_cast<Eigen::Index>(table.rows.size());
  std::vector<Column> columns(schema.columns.size());
  for (std::size_t j = 0; j < schema.columns.size(); ++j) {
    Column& col = columns[j];
    col.name = schema.columns[j].name;
    col.kind = schema.columns[j].kind;
    col.values = Eigen::VectorXd::Zero(n);
    col.missing.assign(static_cast<std::size_t>(n), 0);
    std::unordered_map<std::string, double> code_of;
    for (Eigen::Index r = 0; r < n; ++r) {
      const std::string cell = trim(table.rows[static_cast<std::size_t>(r)][source[j]]);
      if (missing_tokens.count(cell)) {
        col.missing[static_cast<std::size_t>(r)] = 1;
        continue;
      }
      if (col.kind == ColumnKind::Categorical) {
        auto it = code_of.find(cell);
        if (it == code_of.end()) {
          it = code_of.emplace(cell, static_cast<double>(col.dict.size())).first;
          col.dict.push_back(cell);
        }
        col.values[r] = it->second;
      } else {
        double value;
        if (!parse_double(cell, value)) {
          col.missing[static_cast<std::size_t>(r)] = 1;
        } else {
          col.values[r] = value;
        }
      }
    }
  }
  return Frame(schema, std::move(columns));
}

void write_csv(const Frame& frame, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open '" + path + "' for writing");
  const auto& cols = frame.columns();
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (j > 0) out << ',';
    write_field(out, cols[j].name);
  }
  out << '\n';
  for (Eigen::Index r = 0; r < frame.n_rows(); ++r) {
    for (std::size_t j = 0; j < cols.size(); ++j) {
      if (j > 0) out << ',';
      const Column& col = cols[j];
      if (col.is_missing(r)) continue;  // empty field
      if (col.kind == ColumnKind::Categorical) {
        write_field(out, col.text(r));
      } else {
        out << format_double(col.values[r]);
      }
    }
    out << '\n';
  }
  if (!out) fail(ErrorCode::IoFailure, "write to '" + path + "' failed");
}

ColumnSummary column_summary(const Frame& frame, const std::string& name) {
  const Column& col = frame.column(name);
  if (col.kind != ColumnKind::Numeric)
    fail(ErrorCode::NonNumericColumn, "column '" + name + "' is not numeric");

  std::vector<double> observed;
  observed.reserve(static_cast<std::size_t>(col.size()));
  for (Eigen::Index i = 0; i < col.size(); ++i)
    if (!col.is_missing(i)) observed.push_back(col.values[i]);

  ColumnSummary s;
  s.count = static_cast<Eigen::Index>(observed.size());
  s.missing = col.missing_count();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  s.mean = s.std_dev = s.min = s.max = s.q1 = s.median = s.q3 = nan;
  if (observed.empty()) return s;

  std::sort(observed.begin(), observed.end());
  Eigen::Map<const Eigen::VectorXd> v(observed.data(), static_cast<Eigen::Index>(observed.size()));
  s.mean = v.mean();
  s.std_dev = std::sqrt((v.array() - s.mean).square().sum() / static_cast<double>(v.size()));
  s.min = v[0];
  s.max = v[v.size() - 1];
  s.q1 = quantile(v, 0.25);
  s.median = quantile(v, 0.5);
  s.q3 = quantile(v, 0.75);
  return s;
}

}  // namespace stackliver
