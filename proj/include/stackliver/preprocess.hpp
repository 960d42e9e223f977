#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "stackliver/tabular.hpp"

namespace stackliver {

struct Fences {
  double lo = 0.0;
  double hi = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std_dev = 0.0;
  bool constant = false;  // std_dev == 0; standardized output is 0
};

struct CategoricalEncoder {
  std::string mode;                     // imputation value
  std::vector<std::string> categories;  // lexicographic; code = position
};

// Fitted transform parameters, reapplied verbatim at inference.
struct PreprocessState {
  bool fitted = false;
  std::map<std::string, CategoricalEncoder> encoders;
  std::map<std::string, Fences> fences;
  std::map<std::string, MeanStd> scale;
};

// Most frequent observed value; ties break toward the lexicographically
// smallest value.
std::string categorical_mode(const Frame& frame, const std::string& column);

// Replaces missing cells of a categorical column by the most frequent value;
// ties break toward the lexicographically smallest value.
Frame impute_mode(const Frame& frame, const std::string& column);

// Keeps exactly the rows with no missing cell in any listed column.
Frame drop_missing_rows(const Frame& frame, const std::vector<std::string>& columns);

// Integer codes in lexicographic order of the distinct values, starting at 0;
// the column kind becomes numeric.
std::pair<Frame, CategoricalEncoder> encode_categorical(const Frame& frame, const std::string& column);

// Re-encodes with a previously fitted encoder (mode imputation + codes).
// Unseen categories are an error.
Frame apply_categorical_encoder(const Frame& frame, const std::string& column,
                                const CategoricalEncoder& encoder);

// IQR outlier fences: lo = Q1 - k*IQR, hi = Q3 + k*IQR over non-missing cells.
Fences fit_fences(const Frame& frame, const std::string& column, double k = 1.5);

// Clamps every cell of the column into [lo, hi].
Frame winsorize(const Frame& frame, const std::string& column, Fences fences);

// Maps raw labels {1, 2} to {0, 1}. Any other label value is an error.
Frame recode_label(const Frame& frame);

struct StandardizerState {
  bool fitted = false;
  std::map<std::string, MeanStd> by_column;
};

// Population mean/std (divisor N) per column, fitted on training data only.
StandardizerState fit_standardizer(const Frame& train, const std::vector<std::string>& columns);

// z = (x - mean) / std per fitted column; constant columns map to 0.
Frame apply_standardizer(const StandardizerState& state, const Frame& frame);

struct SplitResult {
  Frame train;
  Frame test;
  std::uint64_t seed = 0;
  double train_fraction = 0.8;
  bool empty_test = false;
};

// Seeded per-class shuffle; the first floor(fraction * n_c) rows of each
// class go to train. Row order within each part follows the input order.
SplitResult train_test_split(const Frame& frame, double train_fraction = 0.8,
                             std::uint64_t seed = 42, bool stratified = true);

// Subsamples the majority class without replacement down to the minority
// count. Minority rows are kept intact.
Frame random_undersample(const Frame& train, std::uint64_t seed);

}  // namespace stackliver
