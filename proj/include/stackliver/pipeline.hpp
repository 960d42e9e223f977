#pragma once

#include <json.hpp>
#include <cstdint>
#include <string>
#include <vector>

#include "stackliver/evaluation.hpp"
#include "stackliver/explain.hpp"
#include "stackliver/mlp.hpp"
#include "stackliver/model_io.hpp"
#include "stackliver/preprocess.hpp"
#include "stackliver/selection.hpp"
#include "stackliver/stacking.hpp"
#include "stackliver/tabular.hpp"

namespace stackliver {

struct ExplainConfig {
  int lime_samples = 5000;
  int morris_r = 20;
  int morris_p = 4;
  int shap_background = 100;
  int shap_rows = 200;
};

// One document carrying every knob; the defaults reproduce the reference
// experiment, so a config with only a dataset path runs it end to end.
struct PipelineConfig {
  std::string data;
  std::string out = "out";
  std::uint64_t seed = 42;
  int threads = 0;              // 0 = auto
  std::string format = "json";  // "json" | "csv" (csv adds flat table files)
  double train_fraction = 0.8;
  bool stratified = true;
  double iqr_multiplier = 1.5;
  double anova_alpha = 0.05;
  int cv_folds = 5;
  RfecvParams rfe;
  int select_k_size = 5;
  StackParams stack;
  MlpParams mlp;
  ExplainConfig explain;
  Schema schema;
  CsvOptions csv;

  static PipelineConfig defaults();
  static PipelineConfig from_json(const Json& j);
  static PipelineConfig load(const std::string& path);
  Json to_json() const;
  void validate() const;
};

// Everything needed to reproduce predictions: fitted preprocessing, selected
// features, the stacked model, stats for the explainers, and provenance.
struct ModelBundle {
  int format_version = 1;
  PreprocessState preprocess;
  Schema schema;
  CsvOptions csv;
  std::vector<std::string> selected_features;
  StackClassifier model;
  Json train_stats;  // per feature mean/std/quartiles/min/max (model space)
  Json config_snapshot;
  Json provenance;

  Json to_json() const;
  static ModelBundle from_json(const Json& j);
  void save(const std::string& path) const;
  static ModelBundle load(const std::string& path);
};

enum class Stage { Preprocess, Anova, Undersample, Rfecv, Train, Evaluate, Explain };

const char* stage_name(Stage stage);

struct PipelineResult {
  Json preprocess_report;
  Json anova_report;
  Json balance_report;
  Json rfecv_report;
  Json metrics_report;
  Json cv_report;
  Json timings_report;
  Json roc_report;
  Json confusion_report;
  Json shap_report;
  Json morris_report;
  std::vector<Json> lime_reports;
  ModelBundle bundle;
};

// Runs stages up to and including `last`, writing the report tree under
// config.out. Completed stages found in the output directory are reused when
// their content keys match.
PipelineResult run_pipeline(const PipelineConfig& config, Stage last = Stage::Explain);

struct PredictStats {
  Eigen::Index rows = 0;
  double inference_seconds = 0.0;
};

// Applies a saved bundle to a feature CSV and writes per-row class-1
// probability and hard label.
PredictStats cmd_predict(const std::string& bundle_path, const std::string& input_csv,
                         const std::string& output_path, const std::string& format = "csv");

// Runs one explainer from a saved bundle against rows of a feature CSV.
Json cmd_explain(const std::string& bundle_path, const std::string& input_csv,
                 const std::string& method, int rows, std::uint64_t seed);

Json metrics_report_to_json(const MetricsReport& report);
Json cv_report_to_json(const CvReport& report);

}  // namespace stackliver
