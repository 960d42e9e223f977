#include "stackliver/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "stackliver/error.hpp"
#include "stackliver/numerics.hpp"
#include "stackliver/rng.hpp"

namespace stackliver {

std::string categorical_mode(const Frame& frame, const std::string& column) {
  const Column& col = frame.column(column);
  if (col.kind != ColumnKind::Categorical)
    fail(ErrorCode::NonCategorical, "categorical_mode requires a categorical column");

  std::map<std::string, Eigen::Index> counts;  // ordered: lexicographic tie-break for free
  for (Eigen::Index i = 0; i < col.size(); ++i)
    if (!col.is_missing(i)) ++counts[col.text(i)];
  if (counts.empty()) fail(ErrorCode::AllMissing, "column '" + column + "' has no observed values");

  std::string mode;
  Eigen::Index best = -1;
  for (const auto& [value, count] : counts) {
    if (count > best) {
      best = count;
      mode = value;
    }
  }
  return mode;
}

Frame impute_mode(const Frame& frame, const std::string& column) {
  const std::size_t idx = frame.column_index(column);
  const Column& col = frame.columns()[idx];
  const std::string mode = categorical_mode(frame, column);

  Column out = col;
  double mode_code = -1.0;
  for (std::size_t c = 0; c < out.dict.size(); ++c)
    if (out.dict[c] == mode) mode_code = static_cast<double>(c);
  if (mode_code < 0) {
    mode_code = static_cast<double>(out.dict.size());
    out.dict.push_back(mode);
  }
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out.is_missing(i)) {
      out.values[i] = mode_code;
      out.missing[static_cast<std::size_t>(i)] = 0;
    }
  }
  return frame.replace_column(idx, std::move(out));
}

Frame drop_missing_rows(const Frame& frame, const std::vector<std::string>& columns) {
  std::vector<const Column*> watched;
  for (const auto& name : columns) watched.push_back(&frame.column(name));
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(frame.n_rows()));
  for (Eigen::Index r = 0; r < frame.n_rows(); ++r) {
    bool ok = true;
    for (const Column* col : watched) {
      if (col->is_missing(r)) {
        ok = false;
        break;
      }
    }
    if (ok) keep.push_back(r);
  }
  return frame.select_rows(keep);
}

std::pair<Frame, CategoricalEncoder> encode_categorical(const Frame& frame, const std::string& column) {
  const std::size_t idx = frame.column_index(column);
  const Column& col = frame.columns()[idx];
  if (col.kind != ColumnKind::Categorical)
    fail(ErrorCode::NonCategorical, "encode_categorical requires a categorical column");
  if (col.any_missing())
    fail(ErrorCode::HasMissing, "column '" + column + "' must be imputed before encoding");

  CategoricalEncoder encoder;
  encoder.categories = col.dict;
  std::sort(encoder.categories.begin(), encoder.categories.end());
  encoder.categories.erase(std::unique(encoder.categories.begin(), encoder.categories.end()),
                           encoder.categories.end());

  std::map<std::string, double> code_of;
  for (std::size_t c = 0; c < encoder.categories.size(); ++c)
    code_of[encoder.categories[c]] = static_cast<double>(c);

  Column out;
  out.name = col.name;
  out.kind = ColumnKind::Numeric;
  out.values.resize(col.size());
  out.missing.assign(static_cast<std::size_t>(col.size()), 0);
  for (Eigen::Index i = 0; i < col.size(); ++i) out.values[i] = code_of.at(col.text(i));
  return {frame.replace_column(idx, std::move(out)), encoder};
}

Frame apply_categorical_encoder(const Frame& frame, const std::string& column,
                                const CategoricalEncoder& encoder) {
  const std::size_t idx = frame.column_index(column);
  const Column& col = frame.columns()[idx];
  if (col.kind != ColumnKind::Categorical)
    fail(ErrorCode::NonCategorical, "column '" + column + "' is not categorical");
  std::map<std::string, double> code_of;
  for (std::size_t c = 0; c < encoder.categories.size(); ++c)
    code_of[encoder.categories[c]] = static_cast<double>(c);
  Column out;
  out.name = col.name;
  out.kind = ColumnKind::Numeric;
  out.values.resize(col.size());
  out.missing.assign(static_cast<std::size_t>(col.size()), 0);
  for (Eigen::Index i = 0; i < col.size(); ++i) {
    const std::string& text = col.is_missing(i) ? encoder.mode : col.text(i);
    const auto it = code_of.find(text);
    if (it == code_of.end())
      fail(ErrorCode::SchemaMismatch, "unseen category '" + text + "' in column '" + column + "'");
    out.values[i] = it->second;
  }
  return frame.replace_column(idx, std::move(out));
}

Fences fit_fences(const Frame& frame, const std::string& column, double k) {
  const Column& col = frame.column(column);
  if (col.kind != ColumnKind::Numeric)
    fail(ErrorCode::NonNumericColumn, "fit_fences requires a numeric column");
  std::vector<double> observed;
  for (Eigen::Index i = 0; i < col.size(); ++i)
    if (!col.is_missing(i)) observed.push_back(col.values[i]);
  if (observed.size() < 4) fail(ErrorCode::TooFewValues, "fit_fences needs >= 4 observed values");
  std::sort(observed.begin(), observed.end());
  Eigen::Map<const Eigen::VectorXd> v(observed.data(), static_cast<Eigen::Index>(observed.size()));
  const double q1 = quantile(v, 0.25);
  const double q3 = quantile(v, 0.75);
  const double iqr = q3 - q1;
  return {q1 - k * iqr, q3 + k * iqr};
}

Frame winsorize(const Frame& frame, const std::string& column, Fences fences) {
  if (fences.lo > fences.hi) fail(ErrorCode::InvalidFences, "lo > hi");
  const std::size_t idx = frame.column_index(column);
  Column out = frame.columns()[idx];
  if (out.kind != ColumnKind::Numeric)
    fail(ErrorCode::NonNumericColumn, "winsorize requires a numeric column");
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out.is_missing(i)) continue;
    out.values[i] = std::clamp(out.values[i], fences.lo, fences.hi);
  }
  return frame.replace_column(idx, std::move(out));
}

Frame recode_label(const Frame& frame) {
  const std::size_t idx = frame.column_index(frame.schema().label().name);
  Column out = frame.columns()[idx];
  for (Eigen::Index i = 0; i < out.size(); ++i) {
    if (out.is_missing(i)) continue;
    if (out.values[i] == 1.0) {
      out.values[i] = 0.0;
    } else if (out.values[i] == 2.0) {
      out.values[i] = 1.0;
    } else {
      fail(ErrorCode::UnexpectedLabelValue,
           "label value " + std::to_string(out.values[i]) + " outside {1,2}");
    }
  }
  return frame.replace_column(idx, std::move(out));
}

StandardizerState fit_standardizer(const Frame& train, const std::vector<std::string>& columns) {
  StandardizerState state;
  for (const auto& name : columns) {
    const Column& col = train.column(name);
    if (col.kind != ColumnKind::Numeric)
      fail(ErrorCode::NonNumericColumn, "fit_standardizer requires numeric columns");
    if (col.any_missing()) fail(ErrorCode::HasMissing, "column '" + name + "' has missing cells");
    MeanStd ms;
    ms.mean = col.values.mean();
    ms.std_dev = std::sqrt((col.values.array() - ms.mean).square().sum() /
                           static_cast<double>(col.size()));
    ms.constant = (ms.std_dev == 0.0);
    state.by_column[name] = ms;
  }
  state.fitted = true;
  return state;
}

Frame apply_standardizer(const StandardizerState& state, const Frame& frame) {
  if (!state.fitted) fail(ErrorCode::NotFitted, "standardizer has not been fitted");
  Frame out = frame;
  for (const auto& [name, ms] : state.by_column) {
    const std::size_t idx = out.column_index(name);
    Column col = out.columns()[idx];
    for (Eigen::Index i = 0; i < col.size(); ++i) {
      if (col.is_missing(i)) continue;
      col.values[i] = ms.constant ? 0.0 : (col.values[i] - ms.mean) / ms.std_dev;
    }
    out = out.replace_column(idx, std::move(col));
  }
  return out;
}

namespace {

// Row indices per class code, in input order. Keys sorted ascending.
std::map<int, std::vector<Eigen::Index>> indices_by_class(const Frame& frame) {
  const Eigen::VectorXi y = frame.labels();
  std::map<int, std::vector<Eigen::Index>> by_class;
  for (Eigen::Index i = 0; i < y.size(); ++i) by_class[y[i]].push_back(i);
  return by_class;
}

}  // namespace

SplitResult train_test_split(const Frame& frame, double train_fraction, std::uint64_t seed,
                             bool stratified) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    fail(ErrorCode::ConfigError, "train_fraction must lie in (0,1]");
  const auto by_class = indices_by_class(frame);
  if (by_class.size() < 2) fail(ErrorCode::SingleClass, "train_test_split needs two classes");

  Rng rng(seed);
  std::vector<Eigen::Index> train_rows, test_rows;
  if (stratified) {
    for (const auto& [label, rows] : by_class) {
      (void)label;
      std::vector<Eigen::Index> shuffled = rows;
      rng.shuffle(shuffled);
      const auto n_train = static_cast<std::size_t>(
          std::floor(train_fraction * static_cast<double>(shuffled.size())));
      train_rows.insert(train_rows.end(), shuffled.begin(), shuffled.begin() + n_train);
      test_rows.insert(test_rows.end(), shuffled.begin() + n_train, shuffled.end());
    }
  } else {
    std::vector<Eigen::Index> shuffled(static_cast<std::size_t>(frame.n_rows()));
    for (std::size_t i = 0; i < shuffled.size(); ++i) shuffled[i] = static_cast<Eigen::Index>(i);
    rng.shuffle(shuffled);
    const auto n_train = static_cast<std::size_t>(
        std::floor(train_fraction * static_cast<double>(shuffled.size())));
    train_rows.assign(shuffled.begin(), shuffled.begin() + n_train);
    test_rows.assign(shuffled.begin() + n_train, shuffled.end());
  }
  std::sort(train_rows.begin(), train_rows.end());
  std::sort(test_rows.begin(), test_rows.end());

  SplitResult result;
  result.train = frame.select_rows(train_rows);
  result.test = frame.select_rows(test_rows);
  result.seed = seed;
  result.train_fraction = train_fraction;
  result.empty_test = test_rows.empty();
  return result;
}

Frame random_undersample(const Frame& train, std::uint64_t seed) {
  const auto by_class = indices_by_class(train);
  if (by_class.size() < 2) fail(ErrorCode::SingleClass, "random_undersample needs two classes");

  std::size_t minority = static_cast<std::size_t>(-1);
  for (const auto& [label, rows] : by_class) {
    (void)label;
    minority = std::min(minority, rows.size());
  }

  Rng rng(seed);
  std::vector<Eigen::Index> keep;
  for (const auto& [label, rows] : by_class) {
    (void)label;
    if (rows.size() == minority) {
      keep.insert(keep.end(), rows.begin(), rows.end());
    } else {
      const auto picks = rng.sample_without_replacement(rows.size(), minority);
      for (const auto p : picks) keep.push_back(rows[p]);
    }
  }
  std::sort(keep.begin(), keep.end());
  return train.select_rows(keep);
}

}  // namespace stackliver
