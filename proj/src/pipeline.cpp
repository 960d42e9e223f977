#include "stackliver/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "stackliver/error.hpp"
#include "stackliver/numerics.hpp"
#include "stackliver/parallel.hpp"

namespace fs = std::filesystem;

namespace stackliver {

namespace {

constexpr int kBundleFormatVersion = 1;
constexpr const char* kLibraryVersion = "1.0.0";

// Stage seeds derive statelessly from the config seed, so resumed runs agree
// with fresh ones.
enum SeedSalt : std::uint64_t {
  kSplitSalt = 1,
  kUndersampleSalt = 2,
  kRfecvSalt = 3,
  kTrainSalt = 4,
  kCvSalt = 5,
  kExplainSalt = 6,
};

std::uint64_t stage_seed(std::uint64_t base, std::uint64_t salt) {
  std::uint64_t state = base ^ (salt * 0x9E3779B97F4A7C15ULL);
  return splitmix64_next(state);
}

std::uint64_t fnv1a(const std::string& text, std::uint64_t h = 1469598103934665603ULL) {
  for (const unsigned char c : text) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::string fmt_double(double v) {
  char buf[40];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  (void)ec;
  return std::string(buf, ptr);
}

std::uint64_t file_hash(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path + "'");
  std::uint64_t h = 1469598103934665603ULL;
  char buf[65536];
  while (in.read(buf, sizeof(buf)) || in.gcount() > 0) {
    const auto got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buf[i]);
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void write_text(const fs::path& path, const std::string& text) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "' for writing");
  out << text;
  if (!out) fail(ErrorCode::IoFailure, "write to '" + path.string() + "' failed");
}

void write_json(const fs::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open '" + path.string() + "'");
  Json j;
  in >> j;
  return j;
}

// Short display names for the clinical markers (report annotations only).
const std::map<std::string, std::string>& short_names() {
  static const std::map<std::string, std::string> names = {
      {"Total Bilirubin", "TB"},     {"Direct Bilirubin", "DB"},
      {"Alkaline Phosphatase", "ALP"}, {"Alanine Aminotransferase", "SGPT"},
      {"Aspartate Aminotransferase", "SGOT"}, {"Total Proteins", "TP"},
      {"Albumin", "ALB"},            {"A/G Ratio", "AG"},
  };
  return names;
}

std::string short_name(const std::string& full) {
  const auto it = short_names().find(full);
  return it == short_names().end() ? full : it->second;
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig c;
  c.schema.columns = {
      {"Age", ColumnKind::Numeric},
      {"Gender", ColumnKind::Categorical},
      {"Total Bilirubin", ColumnKind::Numeric},
      {"Direct Bilirubin", ColumnKind::Numeric},
      {"Alkaline Phosphatase", ColumnKind::Numeric},
      {"Alanine Aminotransferase", ColumnKind::Numeric},
      {"Aspartate Aminotransferase", ColumnKind::Numeric},
      {"Total Proteins", ColumnKind::Numeric},
      {"Albumin", ColumnKind::Numeric},
      {"A/G Ratio", ColumnKind::Numeric},
      {"Result", ColumnKind::Label},
  };
  c.schema.label_positive = 1;
  c.csv.aliases = {
      {"Age of the patient", "Age"},
      {"Gender of the patient", "Gender"},
      {"TB", "Total Bilirubin"},
      {"DB", "Direct Bilirubin"},
      {"Alkphos Alkaline Phosphotase", "Alkaline Phosphatase"},
      {"Alkphos Alkaline Phosphatase", "Alkaline Phosphatase"},
      {"Alkphos", "Alkaline Phosphatase"},
      {"ALP", "Alkaline Phosphatase"},
      {"Sgpt Alamine Aminotransferase", "Alanine Aminotransferase"},
      {"Alamine Aminotransferase", "Alanine Aminotransferase"},
      {"Sgpt", "Alanine Aminotransferase"},
      {"SGPT", "Alanine Aminotransferase"},
      {"Sgot Aspartate Aminotransferase", "Aspartate Aminotransferase"},
      {"Sgot", "Aspartate Aminotransferase"},
      {"SGOT", "Aspartate Aminotransferase"},
      {"Total Protiens", "Total Proteins"},
      {"TP", "Total Proteins"},
      {"ALB Albumin", "Albumin"},
      {"ALB", "Albumin"},
      {"A/G Ratio Albumin and Globulin Ratio", "A/G Ratio"},
      {"AG Ratio", "A/G Ratio"},
      {"Albumin and Globulin Ratio", "A/G Ratio"},
      {"Selector", "Result"},
      {"Dataset", "Result"},
  };
  return c;
}

void PipelineConfig::validate() const {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    fail(ErrorCode::ConfigError, "train_fraction must lie in (0,1]");
  if (!(anova_alpha > 0.0 && anova_alpha < 1.0))
    fail(ErrorCode::ConfigError, "anova_alpha must lie in (0,1)");
  if (format != "json" && format != "csv") fail(ErrorCode::ConfigError, "format must be json or csv");
  schema.validate();
}

Json PipelineConfig::to_json() const {
  Json rfe_json{{"k_folds", rfe.k_folds},
                {"record_sizes", rfe.record_sizes},
                {"estimator", Json{{"n_trees", rfe.estimator.n_trees},
                                   {"max_depth", rfe.estimator.max_depth},
                                   {"min_samples_leaf", rfe.estimator.min_samples_leaf},
                                   {"max_features", rfe.estimator.max_features},
                                   {"bootstrap", rfe.estimator.bootstrap}}}};
  Json aliases = Json::object();
  for (const auto& [from, to] : csv.aliases) aliases[from] = to;
  return Json{{"data", data},
              {"out", out},
              {"seed", seed},
              {"threads", threads},
              {"format", format},
              {"train_fraction", train_fraction},
              {"stratified", stratified},
              {"iqr_multiplier", iqr_multiplier},
              {"anova_alpha", anova_alpha},
              {"cv_folds", cv_folds},
              {"rfe", std::move(rfe_json)},
              {"select_k", select_k_size},
              {"stack", stack_params_to_json(stack)},
              {"mlp", mlp_params_to_json(mlp)},
              {"explain", Json{{"lime_samples", explain.lime_samples},
                               {"morris_r", explain.morris_r},
                               {"morris_p", explain.morris_p},
                               {"shap_background", explain.shap_background},
                               {"shap_rows", explain.shap_rows}}},
              {"schema", schema_to_json(schema)},
              {"missing_tokens", csv.missing_tokens},
              {"aliases", std::move(aliases)}};
}

PipelineConfig PipelineConfig::from_json(const Json& j) {
  PipelineConfig c = defaults();
  const auto get = [&](const char* key, auto& into) {
    if (j.contains(key)) into = j.at(key).get<std::decay_t<decltype(into)>>();
  };
  get("data", c.data);
  get("out", c.out);
  get("seed", c.seed);
  get("threads", c.threads);
  get("format", c.format);
  get("train_fraction", c.train_fraction);
  get("stratified", c.stratified);
  get("iqr_multiplier", c.iqr_multiplier);
  get("anova_alpha", c.anova_alpha);
  get("cv_folds", c.cv_folds);
  get("select_k", c.select_k_size);
  if (j.contains("rfe")) {
    const Json& r = j.at("rfe");
    if (r.contains("k_folds")) c.rfe.k_folds = r.at("k_folds").get<int>();
    if (r.contains("record_sizes")) c.rfe.record_sizes = r.at("record_sizes").get<std::vector<int>>();
    if (r.contains("estimator")) {
      const Json& e = r.at("estimator");
      if (e.contains("n_trees")) c.rfe.estimator.n_trees = e.at("n_trees").get<int>();
      if (e.contains("max_depth")) c.rfe.estimator.max_depth = e.at("max_depth").get<int>();
      if (e.contains("min_samples_leaf"))
        c.rfe.estimator.min_samples_leaf = e.at("min_samples_leaf").get<int>();
      if (e.contains("max_features")) c.rfe.estimator.max_features = e.at("max_features").get<int>();
      if (e.contains("bootstrap")) c.rfe.estimator.bootstrap = e.at("bootstrap").get<bool>();
    }
  }
  if (j.contains("stack")) c.stack = stack_params_from_json(j.at("stack"));
  if (j.contains("mlp")) c.mlp = mlp_params_from_json(j.at("mlp"));
  if (j.contains("explain")) {
    const Json& e = j.at("explain");
    if (e.contains("lime_samples")) c.explain.lime_samples = e.at("lime_samples").get<int>();
    if (e.contains("morris_r")) c.explain.morris_r = e.at("morris_r").get<int>();
    if (e.contains("morris_p")) c.explain.morris_p = e.at("morris_p").get<int>();
    if (e.contains("shap_background"))
      c.explain.shap_background = e.at("shap_background").get<int>();
    if (e.contains("shap_rows")) c.explain.shap_rows = e.at("shap_rows").get<int>();
  }
  if (j.contains("schema")) c.schema = schema_from_json(j.at("schema"));
  if (j.contains("missing_tokens"))
    c.csv.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
  if (j.contains("aliases")) {
    c.csv.aliases.clear();
    for (const auto& [from, to] : j.at("aliases").items())
      c.csv.aliases[from] = to.get<std::string>();
  }
  c.validate();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::ConfigError, "cannot open config '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::ConfigError, "config parse error: " + std::string(e.what()));
  }
  return from_json(j);
}

Json ModelBundle::to_json() const {
  Json aliases = Json::object();
  for (const auto& [from, to] : csv.aliases) aliases[from] = to;
  return Json{{"format_version", format_version},
              {"preprocess", preprocess_state_to_json(preprocess)},
              {"schema", schema_to_json(schema)},
              {"missing_tokens", csv.missing_tokens},
              {"aliases", std::move(aliases)},
              {"selected_features", selected_features},
              {"model", stack_to_json(model)},
              {"train_stats", train_stats},
              {"config", config_snapshot},
              {"provenance", provenance}};
}

ModelBundle ModelBundle::from_json(const Json& j) {
  ModelBundle b;
  b.format_version = j.at("format_version").get<int>();
  if (b.format_version > kBundleFormatVersion)
    fail(ErrorCode::VersionMismatch,
         "bundle format_version " + std::to_string(b.format_version) + " is newer than this binary");
  b.preprocess = preprocess_state_from_json(j.at("preprocess"));
  b.schema = schema_from_json(j.at("schema"));
  b.csv.missing_tokens = j.at("missing_tokens").get<std::vector<std::string>>();
  for (const auto& [from, to] : j.at("aliases").items()) b.csv.aliases[from] = to.get<std::string>();
  b.selected_features = j.at("selected_features").get<std::vector<std::string>>();
  b.model = stack_from_json(j.at("model"));
  b.train_stats = j.at("train_stats");
  b.config_snapshot = j.at("config");
  b.provenance = j.at("provenance");
  return b;
}

void ModelBundle::save(const std::string& path) const { write_json(path, to_json()); }

ModelBundle ModelBundle::load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::IoFailure, "cannot open bundle '" + path + "'");
  Json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    fail(ErrorCode::SchemaMismatch, "bundle parse error: " + std::string(e.what()));
  }
  return from_json(j);
}

const char* stage_name(Stage stage) {
  switch (stage) {
    case Stage::Preprocess: return "preprocess";
    case Stage::Anova: return "anova";
    case Stage::Undersample: return "undersample";
    case Stage::Rfecv: return "rfecv";
    case Stage::Train: return "train";
    case Stage::Evaluate: return "evaluate";
    case Stage::Explain: return "explain";
  }
  return "unknown";
}

Json metrics_report_to_json(const MetricsReport& r) {
  const auto class_json = [](const ClassMetrics& c) {
    return Json{{"precision", c.precision}, {"recall", c.recall},     {"f1", c.f1},
                {"support", c.support},     {"degenerate", c.degenerate}};
  };
  return Json{{"accuracy", r.accuracy},
              {"positive", class_json(r.positive)},
              {"negative", class_json(r.negative)},
              {"macro", Json{{"precision", r.macro_precision},
                             {"recall", r.macro_recall},
                             {"f1", r.macro_f1}}},
              {"weighted", Json{{"precision", r.weighted_precision},
                                {"recall", r.weighted_recall},
                                {"f1", r.weighted_f1}}},
              {"kappa", r.kappa},
              {"kappa_degenerate", r.kappa_degenerate},
              {"auc", r.has_auc ? Json(r.auc) : Json()},
              {"confusion",
               Json{{"tn", r.confusion.tn}, {"fp", r.confusion.fp}, {"fn", r.confusion.fn},
                    {"tp", r.confusion.tp}}}};
}

Json cv_report_to_json(const CvReport& r) {
  return Json{{"mean_accuracy", r.mean_accuracy}, {"std_accuracy", r.std_accuracy},
              {"mean_auc", r.mean_auc},           {"std_auc", r.std_auc},
              {"fold_accuracy", r.fold_accuracy}, {"fold_auc", r.fold_auc}};
}

namespace {

struct StageRunner {
  const PipelineConfig& config;
  int threads;
  fs::path out_dir;
  fs::path cache_dir;
  Json manifest;
  bool invalidated = false;

  // state carried across stages
  Schema clean_schema;
  PreprocessState state;
  Frame train, test, balanced;
  std::vector<std::string> numeric_predictors;   // all predictors after encoding
  std::vector<std::string> original_numeric;     // predictors numeric before encoding
  std::vector<std::string> kept;                 // after the significance filter
  std::vector<std::string> selected;             // after RFE-CV
  GbdtClassifier gbdt;
  KnnClassifier knn;
  MlpClassifier mlp;
  double gbdt_train_s = 0.0, knn_train_s = 0.0, mlp_train_s = 0.0, stack_train_s = 0.0;
  PipelineResult result;

  explicit StageRunner(const PipelineConfig& cfg)
      : config(cfg), threads(resolve_threads(cfg.threads)), out_dir(cfg.out),
        cache_dir(fs::path(cfg.out) / "cache") {
    fs::create_directories(cache_dir);
    const fs::path manifest_path = out_dir / "stages.json";
    if (fs::exists(manifest_path)) {
      try {
        manifest = read_json(manifest_path);
      } catch (...) {
        manifest = Json::object();
      }
    }
    if (!manifest.contains("stages")) manifest["stages"] = Json::object();
  }

  void save_manifest() { write_json(out_dir / "stages.json", manifest); }

  bool stage_ok(const std::string& name, const std::string& key,
                const std::vector<fs::path>& outputs) const {
    if (invalidated) return false;
    const auto& stages = manifest.at("stages");
    if (!stages.contains(name)) return false;
    const auto& entry = stages.at(name);
    if (!entry.contains("key") || entry.at("key") != key) return false;
    if (!entry.contains("status") || entry.at("status") != "ok") return false;
    for (const auto& path : outputs)
      if (!fs::exists(path)) return false;
    return true;
  }

  void mark(const std::string& name, const std::string& key, const std::string& status) {
    manifest["stages"][name] = Json{{"key", key}, {"status", status}};
    save_manifest();
  }
};

Json column_counts(const Frame& frame) {
  const Eigen::VectorXi y = frame.labels();
  return Json{{"class_0", (y.array() == 0).count()}, {"class_1", (y.array() == 1).count()}};
}

LimeStats lime_stats_from_train_stats(const Json& train_stats,
                                      const std::vector<std::string>& features) {
  LimeStats stats;
  const auto d = static_cast<Eigen::Index>(features.size());
  stats.feature_names = features;
  stats.mean.resize(d);
  stats.std_dev.resize(d);
  stats.quartiles.resize(d, 3);
  stats.display_mean.resize(d);
  stats.display_std.resize(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const Json& f = train_stats.at(features[static_cast<std::size_t>(j)]);
    stats.mean[j] = f.at("mean").get<double>();
    stats.std_dev[j] = f.at("std").get<double>();
    stats.quartiles(j, 0) = f.at("q1").get<double>();
    stats.quartiles(j, 1) = f.at("median").get<double>();
    stats.quartiles(j, 2) = f.at("q3").get<double>();
    stats.display_mean[j] = f.at("display_mean").get<double>();
    stats.display_std[j] = f.at("display_std").get<double>();
  }
  return stats;
}

Json lime_to_json(const LimeExplanation& e, Eigen::Index row) {
  Json items = Json::array();
  for (const auto& item : e.items)
    items.push_back(Json{{"feature", item.feature},
                         {"short_name", short_name(item.feature)},
                         {"weight", item.weight},
                         {"condition", item.condition}});
  return Json{{"row", row},
              {"predicted_class", e.predicted_class},
              {"weights_target", "p(class=1)"},
              {"items", std::move(items)},
              {"intercept", e.intercept},
              {"kernel_width", e.kernel_width},
              {"n_samples", e.n_samples},
              {"fidelity", e.fidelity_defined ? Json(e.fidelity) : Json()}};
}

}  // namespace

PipelineResult run_pipeline(const PipelineConfig& config, Stage last) {
  config.validate();
  if (config.data.empty()) fail(ErrorCode::ConfigError, "no dataset path configured");
  StageRunner runner(config);
  const int threads = runner.threads;

  const std::vector<Stage> stages = {Stage::Preprocess, Stage::Anova, Stage::Undersample,
                                     Stage::Rfecv,      Stage::Train, Stage::Evaluate,
                                     Stage::Explain};

  std::string chain_key;  // key of the previous stage, chained into the next

  for (const Stage stage : stages) {
    const std::string name = stage_name(stage);
    std::string key;
    try {
      switch (stage) {
        case Stage::Preprocess: {
          Json slice{{"data_hash", hex64(file_hash(config.data))},
                     {"schema", schema_to_json(config.schema)},
                     {"missing_tokens", config.csv.missing_tokens},
                     {"aliases", config.to_json().at("aliases")},
                     {"train_fraction", config.train_fraction},
                     {"stratified", config.stratified},
                     {"iqr_multiplier", config.iqr_multiplier},
                     {"seed", config.seed}};
          key = hex64(fnv1a(chain_key + slice.dump()));
          const std::vector<fs::path> outputs = {
              runner.out_dir / "preprocess.json", runner.cache_dir / "train.csv",
              runner.cache_dir / "test.csv", runner.cache_dir / "state.json"};
          if (runner.stage_ok(name, key, outputs)) {
            const Json state_json = read_json(runner.cache_dir / "state.json");
            runner.clean_schema = schema_from_json(state_json.at("schema"));
            runner.state = preprocess_state_from_json(state_json.at("preprocess"));
            runner.original_numeric =
                state_json.at("original_numeric").get<std::vector<std::string>>();
            runner.numeric_predictors = runner.clean_schema.numeric_predictor_names();
            CsvOptions plain;
            runner.train = read_csv((runner.cache_dir / "train.csv").string(), runner.clean_schema, plain);
            runner.test = read_csv((runner.cache_dir / "test.csv").string(), runner.clean_schema, plain);
            runner.result.preprocess_report = read_json(runner.out_dir / "preprocess.json");
            break;
          }
          runner.invalidated = true;

          Frame frame = read_csv(config.data, config.schema, config.csv);
          const Eigen::Index rows_read = frame.n_rows();

          runner.original_numeric = config.schema.numeric_predictor_names();
          for (const auto& col : config.schema.columns) {
            if (col.kind != ColumnKind::Categorical) continue;
            CategoricalEncoder encoder;
            encoder.mode = categorical_mode(frame, col.name);
            frame = impute_mode(frame, col.name);
            auto [encoded, enc] = encode_categorical(frame, col.name);
            frame = std::move(encoded);
            enc.mode = encoder.mode;
            runner.state.encoders[col.name] = enc;
          }
          std::vector<std::string> watch = runner.original_numeric;
          watch.push_back(config.schema.label().name);
          frame = drop_missing_rows(frame, watch);
          if (frame.n_rows() == 0) fail(ErrorCode::EmptyInput, "no rows left after dropping missing");
          frame = recode_label(frame);
          runner.clean_schema = frame.schema();
          runner.numeric_predictors = runner.clean_schema.numeric_predictor_names();

          SplitResult split = train_test_split(frame, config.train_fraction,
                                               stage_seed(config.seed, kSplitSalt), config.stratified);
          runner.train = std::move(split.train);
          runner.test = std::move(split.test);

          for (const auto& column : runner.original_numeric) {
            const Fences fences = fit_fences(runner.train, column, config.iqr_multiplier);
            runner.state.fences[column] = fences;
            runner.train = winsorize(runner.train, column, fences);
            runner.test = winsorize(runner.test, column, fences);
          }
          const StandardizerState scaler = fit_standardizer(runner.train, runner.numeric_predictors);
          runner.state.scale = scaler.by_column;
          runner.train = apply_standardizer(scaler, runner.train);
          runner.test = apply_standardizer(scaler, runner.test);
          runner.state.fitted = true;

          Json fences_json = Json::object();
          for (const auto& [col, f] : runner.state.fences)
            fences_json[col] = Json{{"lo", f.lo}, {"hi", f.hi}};
          runner.result.preprocess_report =
              Json{{"rows_read", rows_read},
                   {"rows_clean", frame.n_rows()},
                   {"rows_dropped", rows_read - frame.n_rows()},
                   {"train", column_counts(runner.train)},
                   {"test", column_counts(runner.test)},
                   {"train_fraction", config.train_fraction},
                   {"stratified", config.stratified},
                   {"split_seed", split.seed},
                   {"empty_test", split.empty_test},
                   {"iqr_multiplier", config.iqr_multiplier},
                   {"fences", std::move(fences_json)},
                   {"standardized", runner.numeric_predictors}};
          write_json(runner.out_dir / "preprocess.json", runner.result.preprocess_report);
          write_csv(runner.train, (runner.cache_dir / "train.csv").string());
          write_csv(runner.test, (runner.cache_dir / "test.csv").string());
          write_json(runner.cache_dir / "state.json",
                     Json{{"schema", schema_to_json(runner.clean_schema)},
                          {"preprocess", preprocess_state_to_json(runner.state)},
                          {"original_numeric", runner.original_numeric}});
          break;
        }

        case Stage::Anova: {
          Json slice{{"alpha", config.anova_alpha}};
          key = hex64(fnv1a(chain_key + slice.dump()));
          const std::vector<fs::path> outputs = {runner.out_dir / "anova.json"};
          if (runner.stage_ok(name, key, outputs)) {
            runner.result.anova_report = read_json(runner.out_dir / "anova.json");
            runner.kept = runner.result.anova_report.at("kept").get<std::vector<std::string>>();
            break;
          }
          runner.invalidated = true;

          const Frame all = Frame::concat_rows(runner.train, runner.test);
          const SignificanceReport report = significance_filter(all, config.anova_alpha);
          runner.kept = report.kept;
          if (runner.kept.empty()) fail(ErrorCode::TooFewFeatures, "every feature failed the filter");

          Json table = Json::array();
          for (const auto& row : report.table)
            table.push_back(Json{{"feature", row.feature},
                                 {"f_stat", std::isinf(row.f_stat) ? Json() : Json(row.f_stat)},
                                 {"p_value", row.p_value},
                                 {"df_between", row.df_between},
                                 {"df_within", row.df_within},
                                 {"degenerate", row.degenerate},
                                 {"kept", row.p_value < report.alpha}});
          runner.result.anova_report = Json{{"alpha", report.alpha},
                                            {"table", std::move(table)},
                                            {"kept", report.kept},
                                            {"dropped", report.dropped}};
          write_json(runner.out_dir / "anova.json", runner.result.anova_report);
          if (config.format == "csv") {
            std::ostringstream csv;
            csv << "feature,f_stat,p_value,kept\n";
            for (const auto& row : report.table)
              csv << '"' << row.feature << "\"," << row.f_stat << ',' << row.p_value << ','
                  << (row.p_value < report.alpha ? 1 : 0) << '\n';
            write_text(runner.out_dir / "anova.csv", csv.str());
          }
          break;
        }

        case Stage::Undersample: {
          Json slice{{"seed", config.seed}};
          key = hex64(fnv1a(chain_key + slice.dump()));
          const std::vector<fs::path> outputs = {runner.out_dir / "balance.json",
                                                 runner.cache_dir / "balanced.csv"};
          if (runner.stage_ok(name, key, outputs)) {
            CsvOptions plain;
            runner.balanced =
                read_csv((runner.cache_dir / "balanced.csv").string(), runner.clean_schema, plain);
            runner.result.balance_report = read_json(runner.out_dir / "balance.json");
            break;
          }
          runner.invalidated = true;

          runner.balanced = random_undersample(runner.train, stage_seed(config.seed, kUndersampleSalt));
          runner.result.balance_report = Json{{"train_before", column_counts(runner.train)},
                                              {"train_after", column_counts(runner.balanced)},
                                              {"test", column_counts(runner.test)}};
          write_json(runner.out_dir / "balance.json", runner.result.balance_report);
          write_csv(runner.balanced, (runner.cache_dir / "balanced.csv").string());
          break;
        }

        case Stage::Rfecv: {
          Json slice{{"rfe", config.to_json().at("rfe")}, {"select_k", config.select_k_size}};
          key = hex64(fnv1a(chain_key + slice.dump()));
          const std::vector<fs::path> outputs = {runner.out_dir / "rfecv.json"};
          if (runner.stage_ok(name, key, outputs)) {
            runner.result.rfecv_report = read_json(runner.out_dir / "rfecv.json");
            runner.selected = runner.result.rfecv_report.at("selected").get<std::vector<std::string>>();
            break;
          }
          runner.invalidated = true;

          const Eigen::MatrixXd X = runner.balanced.matrix(runner.kept);
          const Eigen::VectorXi y = runner.balanced.labels();
          RfecvParams rfe = config.rfe;
          rfe.threads = threads;
          Rng rng(stage_seed(config.seed, kRfecvSalt));
          const RfecvTrace trace = rfecv(X, y, rfe, rng);

          const auto names_of = [&](const std::vector<int>& idx) {
            std::vector<std::string> names;
            for (const int i : idx) names.push_back(runner.kept[static_cast<std::size_t>(i)]);
            return names;
          };

          std::string selected_by = "size_" + std::to_string(config.select_k_size);
          const int want = std::min<int>(config.select_k_size, static_cast<int>(runner.kept.size()));
          try {
            runner.selected = names_of(select_k(trace, want));
          } catch (const Error& e) {
            if (e.code() != ErrorCode::SizeNotRecorded) throw;
            runner.selected = names_of(trace.best_features);
            selected_by = "best";
          }

          Json iterations = Json::array();
          for (const auto& it : trace.iterations)
            iterations.push_back(Json{{"features", names_of(it.features)},
                                      {"mean_accuracy", it.mean_accuracy},
                                      {"fold_accuracies", it.fold_accuracies},
                                      {"removed", runner.kept[static_cast<std::size_t>(it.removed_feature)]}});
          Json size_accuracy = Json::object();
          for (const auto& [size, acc] : trace.size_accuracy)
            size_accuracy[std::to_string(size)] = acc;
          runner.result.rfecv_report = Json{{"iterations", std::move(iterations)},
                                            {"size_accuracy", std::move(size_accuracy)},
                                            {"accuracy_list", trace.accuracy_list},
                                            {"best", names_of(trace.best_features)},
                                            {"selected", runner.selected},
                                            {"selected_by", selected_by},
                                            {"k_folds", rfe.k_folds}};
          write_json(runner.out_dir / "rfecv.json", runner.result.rfecv_report);
          if (config.format == "csv") {
            std::ostringstream csv;
            csv << "n_features,mean_accuracy\n";
            for (const auto& it : trace.iterations)
              csv << it.features.size() << ',' << it.mean_accuracy << '\n';
            write_text(runner.out_dir / "rfecv.csv", csv.str());
          }
          break;
        }

        case Stage::Train: {
          Json slice{{"stack", stack_params_to_json(config.stack)},
                     {"mlp", mlp_params_to_json(config.mlp)}};
          key = hex64(fnv1a(chain_key + slice.dump()));
          const std::vector<fs::path> outputs = {runner.out_dir / "model.json",
                                                 runner.cache_dir / "baselines.json"};
          if (runner.stage_ok(name, key, outputs)) {
            runner.result.bundle = ModelBundle::load((runner.out_dir / "model.json").string());
            const Json baselines = read_json(runner.cache_dir / "baselines.json");
            runner.gbdt = gbdt_from_json(baselines.at("gbdt"));
            runner.knn = knn_from_json(baselines.at("knn"));
            runner.mlp = mlp_from_json(baselines.at("mlp"));
            runner.gbdt_train_s = baselines.at("train_seconds").at("gbdt").get<double>();
            runner.knn_train_s = baselines.at("train_seconds").at("knn").get<double>();
            runner.mlp_train_s = baselines.at("train_seconds").at("mlp").get<double>();
            runner.stack_train_s = baselines.at("train_seconds").at("stack").get<double>();
            break;
          }
          runner.invalidated = true;

          const Eigen::MatrixXd X = runner.balanced.matrix(runner.selected);
          const Eigen::VectorXi y = runner.balanced.labels();
          const std::uint64_t base = stage_seed(config.seed, kTrainSalt);
          Rng seeder(base);
          const std::uint64_t gbdt_seed = seeder.next_u64();
          const std::uint64_t knn_seed = seeder.next_u64();
          const std::uint64_t mlp_seed = seeder.next_u64();
          const std::uint64_t stack_seed = seeder.next_u64();

          runner.gbdt = GbdtClassifier(config.stack.base_gbdt);
          runner.gbdt_train_s = timed_void([&] {
            Rng r(gbdt_seed);
            runner.gbdt.fit(X, y, r);
          });
          runner.knn = KnnClassifier(config.stack.base_knn);
          runner.knn_train_s = timed_void([&] {
            Rng r(knn_seed);
            runner.knn.fit(X, y, r);
          });
          runner.mlp = MlpClassifier(config.mlp);
          runner.mlp_train_s = timed_void([&] {
            Rng r(mlp_seed);
            runner.mlp.fit(X, y, r);
          });
          StackParams stack_params = config.stack;
          stack_params.threads = threads;
          StackClassifier stack(stack_params);
          runner.stack_train_s = timed_void([&] {
            Rng r(stack_seed);
            stack.fit(X, y, r);
          });

          Json train_stats = Json::object();
          for (const auto& feature : runner.selected) {
            const ColumnSummary s = column_summary(runner.balanced, feature);
            const MeanStd scale = runner.state.scale.count(feature)
                                      ? runner.state.scale.at(feature)
                                      : MeanStd{0.0, 1.0, false};
            train_stats[feature] = Json{{"mean", s.mean},
                                        {"std", s.std_dev},
                                        {"q1", s.q1},
                                        {"median", s.median},
                                        {"q3", s.q3},
                                        {"min", s.min},
                                        {"max", s.max},
                                        {"display_mean", scale.mean},
                                        {"display_std", scale.constant ? 1.0 : scale.std_dev}};
          }

          ModelBundle bundle;
          bundle.format_version = kBundleFormatVersion;
          bundle.preprocess = runner.state;
          bundle.schema = config.schema;
          bundle.csv = config.csv;
          bundle.selected_features = runner.selected;
          bundle.model = std::move(stack);
          bundle.train_stats = std::move(train_stats);
          bundle.config_snapshot = config.to_json();
          bundle.provenance = Json{{"seed", config.seed},
                                   {"library_version", kLibraryVersion},
                                   {"created_at_unix",
                                    std::chrono::duration_cast<std::chrono::seconds>(
                                        std::chrono::system_clock::now().time_since_epoch())
                                        .count()}};
          bundle.save((runner.out_dir / "model.json").string());
          runner.result.bundle = std::move(bundle);

          write_json(runner.cache_dir / "baselines.json",
                     Json{{"gbdt", gbdt_to_json(runner.gbdt)},
                          {"knn", knn_to_json(runner.knn)},
                          {"mlp", mlp_to_json(runner.mlp)},
                          {"train_seconds", Json{{"gbdt", runner.gbdt_train_s},
                                                 {"knn", runner.knn_train_s},
                                                 {"mlp", runner.mlp_train_s},
                                                 {"stack", runner.stack_train_s}}}});
          break;
        }

        case Stage::Evaluate: {
          Json slice{{"cv_folds", config.cv_folds}};
          key = hex64(fnv1a(chain_key + slice.dump()));
          const std::vector<fs::path> outputs = {
              runner.out_dir / "metrics.json", runner.out_dir / "cv.json",
              runner.out_dir / "roc.json", runner.out_dir / "confusion.json",
              runner.out_dir / "timings.json"};
          if (runner.stage_ok(name, key, outputs)) {
            runner.result.metrics_report = read_json(runner.out_dir / "metrics.json");
            runner.result.cv_report = read_json(runner.out_dir / "cv.json");
            runner.result.roc_report = read_json(runner.out_dir / "roc.json");
            runner.result.confusion_report = read_json(runner.out_dir / "confusion.json");
            runner.result.timings_report = read_json(runner.out_dir / "timings.json");
            break;
          }
          runner.invalidated = true;

          const Eigen::MatrixXd X_train = runner.balanced.matrix(runner.selected);
          const Eigen::VectorXi y_train = runner.balanced.labels();
          const Eigen::MatrixXd X_test = runner.test.matrix(runner.selected);
          const Eigen::VectorXi y_test = runner.test.labels();
          const StackClassifier& stack = runner.result.bundle.model;

          struct Row {
            std::string name;
            const Classifier* model;
            double train_seconds;
          };
          const std::vector<Row> rows = {{"gbdt", &runner.gbdt, runner.gbdt_train_s},
                                         {"knn", &runner.knn, runner.knn_train_s},
                                         {"mlp", &runner.mlp, runner.mlp_train_s},
                                         {"stack", &stack, runner.stack_train_s}};

          Json metrics = Json::object();
          Json timings = Json::object();
          for (const auto& row : rows) {
            const MetricsReport on_train = evaluate_model(*row.model, X_train, y_train);
            const auto [proba, infer_s] = timed([&] { return row.model->predict_proba(X_test); });
            (void)proba;
            const MetricsReport on_test = evaluate_model(*row.model, X_test, y_test);
            metrics[row.name] = Json{{"train", metrics_report_to_json(on_train)},
                                     {"test", metrics_report_to_json(on_test)}};
            timings[row.name] =
                Json{{"train_seconds", row.train_seconds}, {"inference_seconds", infer_s}};
          }
          runner.result.metrics_report = Json{{"models", std::move(metrics)}};
          runner.result.timings_report = Json{{"models", std::move(timings)},
                                              {"test_rows", X_test.rows()}};

          const std::uint64_t cv_base = stage_seed(config.seed, kCvSalt);
          Rng cv_seeder(cv_base);
          Json cv = Json::object();
          const GbdtParams base_gbdt = config.stack.base_gbdt;
          const KnnParams base_knn = config.stack.base_knn;
          const MlpParams mlp_params = config.mlp;
          StackParams stack_params = config.stack;
          stack_params.threads = 1;  // folds already run in parallel
          const std::vector<std::pair<std::string, ClassifierFactory>> factories = {
              {"gbdt", [&] { return std::make_unique<GbdtClassifier>(base_gbdt); }},
              {"knn", [&] { return std::make_unique<KnnClassifier>(base_knn); }},
              {"mlp", [&] { return std::make_unique<MlpClassifier>(mlp_params); }},
              {"stack", [&] { return std::make_unique<StackClassifier>(stack_params); }}};
          for (const auto& [model_name, factory] : factories) {
            const CvReport report = cross_validate(factory, X_train, y_train, config.cv_folds,
                                                   cv_seeder.next_u64(), threads);
            cv[model_name] = cv_report_to_json(report);
          }
          runner.result.cv_report = Json{{"k_folds", config.cv_folds}, {"models", std::move(cv)}};

          const Eigen::VectorXd stack_scores = positive_proba(stack, X_test);
          Json roc_points = Json::array();
          for (const auto& point : roc_curve(y_test, stack_scores))
            roc_points.push_back(Json{{"threshold", std::isinf(point.threshold) ? Json() : Json(point.threshold)},
                                      {"fpr", point.fpr},
                                      {"tpr", point.tpr}});
          runner.result.roc_report = Json{{"model", "stack"},
                                          {"auc", roc_auc(y_test, stack_scores)},
                                          {"points", std::move(roc_points)}};

          Eigen::VectorXi stack_pred(stack_scores.size());
          for (Eigen::Index i = 0; i < stack_scores.size(); ++i)
            stack_pred[i] = stack_scores[i] > 0.5 ? 1 : 0;
          const ConfusionMatrix cm = confusion(y_test, stack_pred);
          runner.result.confusion_report =
              Json{{"model", "stack"},
                   {"tn", cm.tn},
                   {"fp", cm.fp},
                   {"fn", cm.fn},
                   {"tp", cm.tp},
                   {"misclassified", cm.fp + cm.fn}};

          write_json(runner.out_dir / "metrics.json", runner.result.metrics_report);
          write_json(runner.out_dir / "cv.json", runner.result.cv_report);
          write_json(runner.out_dir / "roc.json", runner.result.roc_report);
          write_json(runner.out_dir / "confusion.json", runner.result.confusion_report);
          write_json(runner.out_dir / "timings.json", runner.result.timings_report);
          if (config.format == "csv") {
            std::ostringstream csv;
            csv << "model,split,accuracy,precision_pos,recall_pos,f1_pos,kappa,auc\n";
            for (const auto& [model_name, m] : runner.result.metrics_report.at("models").items())
              for (const char* split : {"train", "test"}) {
                const Json& r = m.at(split);
                csv << model_name << ',' << split << ',' << r.at("accuracy").get<double>() << ','
                    << r.at("positive").at("precision").get<double>() << ','
                    << r.at("positive").at("recall").get<double>() << ','
                    << r.at("positive").at("f1").get<double>() << ',' << r.at("kappa").get<double>()
                    << ',' << (r.at("auc").is_null() ? 0.0 : r.at("auc").get<double>()) << '\n';
              }
            write_text(runner.out_dir / "metrics.csv", csv.str());

            std::ostringstream cv_csv;
            cv_csv << "model,fold,accuracy,auc\n";
            for (const auto& [model_name, m] : runner.result.cv_report.at("models").items()) {
              const auto& accs = m.at("fold_accuracy");
              const auto& aucs = m.at("fold_auc");
              for (std::size_t i = 0; i < accs.size(); ++i)
                cv_csv << model_name << ',' << i << ',' << accs[i].get<double>() << ','
                       << aucs[i].get<double>() << '\n';
            }
            write_text(runner.out_dir / "cv.csv", cv_csv.str());

            std::ostringstream roc_csv;
            roc_csv << "threshold,fpr,tpr\n";
            for (const auto& point : runner.result.roc_report.at("points"))
              roc_csv << (point.at("threshold").is_null() ? "inf"
                                                          : fmt_double(point.at("threshold").get<double>()))
                      << ',' << point.at("fpr").get<double>() << ',' << point.at("tpr").get<double>()
                      << '\n';
            write_text(runner.out_dir / "roc.csv", roc_csv.str());

            std::ostringstream time_csv;
            time_csv << "model,train_seconds,inference_seconds\n";
            for (const auto& [model_name, m] : runner.result.timings_report.at("models").items())
              time_csv << model_name << ',' << m.at("train_seconds").get<double>() << ','
                       << m.at("inference_seconds").get<double>() << '\n';
            write_text(runner.out_dir / "timings.csv", time_csv.str());
          }
          break;
        }

        case Stage::Explain: {
          Json slice{{"explain", config.to_json().at("explain")}};
          key = hex64(fnv1a(chain_key + slice.dump()));
          const std::vector<fs::path> outputs = {runner.out_dir / "shap.json",
                                                 runner.out_dir / "morris.json"};
          if (runner.stage_ok(name, key, outputs)) {
            runner.result.shap_report = read_json(runner.out_dir / "shap.json");
            runner.result.morris_report = read_json(runner.out_dir / "morris.json");
            for (const int cls : {0, 1}) {
              const fs::path path = runner.out_dir / "lime" / ("class_" + std::to_string(cls) + ".json");
              if (fs::exists(path)) runner.result.lime_reports.push_back(read_json(path));
            }
            break;
          }
          runner.invalidated = true;

          const ModelBundle& bundle = runner.result.bundle;
          const StackClassifier& stack = bundle.model;
          const Eigen::MatrixXd X_test = runner.test.matrix(runner.selected);
          const Eigen::MatrixXd X_train = runner.balanced.matrix(runner.selected);
          const auto d = static_cast<Eigen::Index>(runner.selected.size());

          Rng explain_rng(stage_seed(config.seed, kExplainSalt));
          Rng lime_rng = explain_rng.split();
          Rng shap_rng = explain_rng.split();
          Rng morris_rng = explain_rng.split();

          // LIME: the first test row predicted in each class.
          const Eigen::VectorXi pred = predict_labels(stack, X_test);
          const LimeStats stats = lime_stats_from_train_stats(bundle.train_stats, runner.selected);
          for (const int cls : {0, 1}) {
            Eigen::Index pick = -1;
            for (Eigen::Index i = 0; i < pred.size(); ++i) {
              if (pred[i] == cls) {
                pick = i;
                break;
              }
            }
            if (pick < 0) continue;
            Rng one = lime_rng.split();
            const LimeExplanation explanation =
                lime_explain(stack, X_test.row(pick), stats, config.explain.lime_samples, one);
            const Json j = lime_to_json(explanation, pick);
            write_json(runner.out_dir / "lime" / ("class_" + std::to_string(cls) + ".json"), j);
            runner.result.lime_reports.push_back(j);
          }

          // SHAP global ranking over a test subsample against a training background.
          Eigen::MatrixXd background;
          {
            const auto want = std::min<std::size_t>(
                static_cast<std::size_t>(std::max(1, config.explain.shap_background)),
                static_cast<std::size_t>(X_train.rows()));
            const auto picks =
                shap_rng.sample_without_replacement(static_cast<std::size_t>(X_train.rows()), want);
            background.resize(static_cast<Eigen::Index>(picks.size()), d);
            for (std::size_t i = 0; i < picks.size(); ++i)
              background.row(static_cast<Eigen::Index>(i)) =
                  X_train.row(static_cast<Eigen::Index>(picks[i]));
          }
          const ShapReport shap = shap_global_ranking(positive_probability_fn(stack), X_test,
                                                      background, config.explain.shap_rows,
                                                      shap_rng, static_cast<int>(d));
          Json shap_features = Json::array();
          for (const int j : shap.order)
            shap_features.push_back(Json{{"feature", runner.selected[static_cast<std::size_t>(j)]},
                                         {"short_name", short_name(runner.selected[static_cast<std::size_t>(j)])},
                                         {"mean_abs_shap", shap.mean_abs[j]}});
          runner.result.shap_report = Json{{"output", "log_odds(p_class1)"},
                                           {"base_value", shap.base_value},
                                           {"n_rows", static_cast<int>(shap.rows_used.size())},
                                           {"n_background", background.rows()},
                                           {"features", std::move(shap_features)}};
          write_json(runner.out_dir / "shap.json", runner.result.shap_report);

          // Morris screening on the training bounds.
          Eigen::VectorXd lo(d), hi(d);
          for (Eigen::Index j = 0; j < d; ++j) {
            const Json& f = bundle.train_stats.at(runner.selected[static_cast<std::size_t>(j)]);
            lo[j] = f.at("min").get<double>();
            hi[j] = f.at("max").get<double>();
          }
          const MorrisResult morris = morris_ee(positive_probability_fn(stack), lo, hi,
                                                config.explain.morris_r, config.explain.morris_p,
                                                morris_rng);
          Json morris_features = Json::array();
          for (Eigen::Index j = 0; j < d; ++j) {
            const MorrisFeature& f = morris.features[static_cast<std::size_t>(j)];
            morris_features.push_back(
                Json{{"feature", runner.selected[static_cast<std::size_t>(j)]},
                     {"short_name", short_name(runner.selected[static_cast<std::size_t>(j)])},
                     {"mu", f.mu},
                     {"mu_star", f.mu_star},
                     {"sigma", f.sigma},
                     {"mu_star_conf", f.mu_star_conf}});
          }
          runner.result.morris_report = Json{{"output", "p(class=1)"},
                                             {"r", morris.r},
                                             {"p", morris.p},
                                             {"delta", morris.delta},
                                             {"features", std::move(morris_features)}};
          write_json(runner.out_dir / "morris.json", runner.result.morris_report);
          if (config.format == "csv") {
            std::ostringstream csv;
            csv << "feature,mu,mu_star,sigma,mu_star_conf\n";
            for (Eigen::Index j = 0; j < d; ++j) {
              const MorrisFeature& f = morris.features[static_cast<std::size_t>(j)];
              csv << '"' << runner.selected[static_cast<std::size_t>(j)] << "\"," << f.mu << ','
                  << f.mu_star << ',' << f.sigma << ',' << f.mu_star_conf << '\n';
            }
            write_text(runner.out_dir / "morris.csv", csv.str());
          }
          break;
        }
      }
    } catch (const Error& e) {
      runner.mark(name, key, "failed");
      write_json(runner.out_dir / "error.json",
                 Json{{"stage", name},
                      {"error", error_code_name(e.code())},
                      {"message", e.what()},
                      {"exit_code", error_exit_code(e.code())}});
      throw;
    } catch (const std::exception& e) {
      runner.mark(name, key, "failed");
      write_json(runner.out_dir / "error.json",
                 Json{{"stage", name}, {"error", "Unexpected"}, {"message", e.what()}, {"exit_code", 4}});
      throw;
    }

    runner.mark(name, key, "ok");
    chain_key = key;
    if (stage == last) break;
  }
  return runner.result;
}

namespace {

// Assembles the model-space feature matrix for inference: aliased column
// lookup, stored categorical encoding, fences, then standardization. Missing
// numeric cells map to the training mean (z = 0).
Eigen::MatrixXd inference_matrix(const ModelBundle& bundle, const CsvTable& table) {
  const auto d = static_cast<Eigen::Index>(bundle.selected_features.size());
  const auto n = static_cast<Eigen::Index>(table.rows.size());

  std::unordered_map<std::string, std::size_t> header_pos;
  for (std::size_t i = 0; i < table.header.size(); ++i) {
    std::string name = table.header[i];
    // trim
    while (!name.empty() && (name.front() == ' ' || name.front() == '\t')) name.erase(name.begin());
    while (!name.empty() && (name.back() == ' ' || name.back() == '\t' || name.back() == '\r'))
      name.pop_back();
    const auto alias = bundle.csv.aliases.find(name);
    if (alias != bundle.csv.aliases.end()) name = alias->second;
    header_pos.emplace(name, i);
  }

  const std::set<std::string> missing_tokens(bundle.csv.missing_tokens.begin(),
                                             bundle.csv.missing_tokens.end());
  Eigen::MatrixXd X(n, d);
  for (Eigen::Index j = 0; j < d; ++j) {
    const std::string& feature = bundle.selected_features[static_cast<std::size_t>(j)];
    const auto it = header_pos.find(feature);
    if (it == header_pos.end())
      fail(ErrorCode::SchemaMismatch, "input is missing column '" + feature + "'");
    const std::size_t src = it->second;

    const auto encoder = bundle.preprocess.encoders.find(feature);
    const auto fences = bundle.preprocess.fences.find(feature);
    const auto scale = bundle.preprocess.scale.find(feature);

    for (Eigen::Index r = 0; r < n; ++r) {
      std::string cell = table.rows[static_cast<std::size_t>(r)][src];
      while (!cell.empty() && (cell.front() == ' ' || cell.front() == '\t')) cell.erase(cell.begin());
      while (!cell.empty() && (cell.back() == ' ' || cell.back() == '\t' || cell.back() == '\r'))
        cell.pop_back();

      double value = 0.0;
      bool missing = missing_tokens.count(cell) > 0;
      if (!missing) {
        if (encoder != bundle.preprocess.encoders.end()) {
          const auto& categories = encoder->second.categories;
          const auto pos = std::find(categories.begin(), categories.end(), cell);
          if (pos == categories.end())
            fail(ErrorCode::SchemaMismatch,
                 "unseen category '" + cell + "' in column '" + feature + "'");
          value = static_cast<double>(pos - categories.begin());
        } else {
          const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
          if (ec != std::errc() || ptr != cell.data() + cell.size()) missing = true;
        }
      }
      if (missing && encoder != bundle.preprocess.encoders.end()) {
        const auto& categories = encoder->second.categories;
        const auto pos = std::find(categories.begin(), categories.end(), encoder->second.mode);
        value = static_cast<double>(pos - categories.begin());
        missing = false;
      }
      if (missing) {
        X(r, j) = 0.0;  // training mean in standardized space
        continue;
      }
      if (fences != bundle.preprocess.fences.end())
        value = std::clamp(value, fences->second.lo, fences->second.hi);
      if (scale != bundle.preprocess.scale.end()) {
        const MeanStd& ms = scale->second;
        value = ms.constant ? 0.0 : (value - ms.mean) / ms.std_dev;
      }
      X(r, j) = value;
    }
  }
  return X;
}

}  // namespace

PredictStats cmd_predict(const std::string& bundle_path, const std::string& input_csv,
                         const std::string& output_path, const std::string& format) {
  const ModelBundle bundle = ModelBundle::load(bundle_path);
  const CsvTable table = read_csv_raw(input_csv);
  const Eigen::MatrixXd X = inference_matrix(bundle, table);

  const auto [proba, seconds] = timed([&] { return bundle.model.predict_proba(X); });

  PredictStats stats;
  stats.rows = X.rows();
  stats.inference_seconds = seconds;

  if (format == "json") {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < X.rows(); ++i)
      rows.push_back(Json{{"row", i},
                          {"p_class1", proba(i, 1)},
                          {"label", proba(i, 1) > 0.5 ? 1 : 0}});
    write_json(output_path, Json{{"predictions", std::move(rows)},
                                 {"inference_seconds", seconds}});
  } else {
    std::ostringstream out;
    out << "row,p_class1,label\n";
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      char buf[40];
      const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), proba(i, 1));
      (void)ec;
      out << i << ',' << std::string(buf, ptr) << ',' << (proba(i, 1) > 0.5 ? 1 : 0) << '\n';
    }
    write_text(output_path, out.str());
  }
  return stats;
}

Json cmd_explain(const std::string& bundle_path, const std::string& input_csv,
                 const std::string& method, int rows, std::uint64_t seed) {
  const ModelBundle bundle = ModelBundle::load(bundle_path);
  const CsvTable table = read_csv_raw(input_csv);
  const Eigen::MatrixXd X = inference_matrix(bundle, table);
  if (X.rows() == 0) fail(ErrorCode::EmptyInput, "no rows to explain");
  const StackClassifier& stack = bundle.model;
  const auto d = static_cast<Eigen::Index>(bundle.selected_features.size());
  const int lime_samples = bundle.config_snapshot.at("explain").at("lime_samples").get<int>();
  const ExplainConfig defaults;
  Rng rng(seed);

  if (method == "lime") {
    const LimeStats stats = lime_stats_from_train_stats(bundle.train_stats, bundle.selected_features);
    const Eigen::Index count = std::min<Eigen::Index>(rows < 1 ? 1 : rows, X.rows());
    Json out = Json::array();
    for (Eigen::Index i = 0; i < count; ++i) {
      Rng one = rng.split();
      out.push_back(lime_to_json(lime_explain(stack, X.row(i), stats, lime_samples, one), i));
    }
    return Json{{"method", "lime"}, {"explanations", std::move(out)}};
  }
  if (method == "shap") {
    const Eigen::MatrixXd& train_X = stack.base_knn().train_X();
    const auto want = std::min<std::size_t>(
        static_cast<std::size_t>(defaults.shap_background), static_cast<std::size_t>(train_X.rows()));
    const auto picks =
        rng.sample_without_replacement(static_cast<std::size_t>(train_X.rows()), want);
    Eigen::MatrixXd background(static_cast<Eigen::Index>(picks.size()), d);
    for (std::size_t i = 0; i < picks.size(); ++i)
      background.row(static_cast<Eigen::Index>(i)) = train_X.row(static_cast<Eigen::Index>(picks[i]));

    const ShapReport report = shap_global_ranking(positive_probability_fn(stack), X, background,
                                                  rows < 1 ? defaults.shap_rows : rows, rng,
                                                  static_cast<int>(d));
    Json features = Json::array();
    double max_residual = 0.0;
    for (std::size_t i = 0; i < report.rows_used.size(); ++i) {
      // efficiency residual check per explained row
      const ShapExplanation one =
          shapley_exact(positive_probability_fn(stack), X.row(report.rows_used[i]), background,
                        static_cast<int>(d));
      max_residual = std::max(max_residual,
                              std::fabs(one.phi.sum() - (one.fx - one.base_value)));
      break;  // one row is enough for the reported residual
    }
    for (const int j : report.order)
      features.push_back(Json{{"feature", bundle.selected_features[static_cast<std::size_t>(j)]},
                              {"mean_abs_shap", report.mean_abs[j]}});
    return Json{{"method", "shap"},
                {"output", "log_odds(p_class1)"},
                {"base_value", report.base_value},
                {"efficiency_residual", max_residual},
                {"n_rows", static_cast<int>(report.rows_used.size())},
                {"features", std::move(features)}};
  }
  if (method == "morris") {
    Eigen::VectorXd lo(d), hi(d);
    for (Eigen::Index j = 0; j < d; ++j) {
      const Json& f = bundle.train_stats.at(bundle.selected_features[static_cast<std::size_t>(j)]);
      lo[j] = f.at("min").get<double>();
      hi[j] = f.at("max").get<double>();
    }
    const int r = bundle.config_snapshot.at("explain").at("morris_r").get<int>();
    const int p = bundle.config_snapshot.at("explain").at("morris_p").get<int>();
    const MorrisResult morris = morris_ee(positive_probability_fn(stack), lo, hi, r, p, rng);
    Json features = Json::array();
    for (Eigen::Index j = 0; j < d; ++j) {
      const MorrisFeature& f = morris.features[static_cast<std::size_t>(j)];
      features.push_back(Json{{"feature", bundle.selected_features[static_cast<std::size_t>(j)]},
                              {"short_name", short_name(bundle.selected_features[static_cast<std::size_t>(j)])},
                              {"mu", f.mu},
                              {"mu_star", f.mu_star},
                              {"sigma", f.sigma},
                              {"mu_star_conf", f.mu_star_conf}});
    }
    return Json{{"method", "morris"},
                {"output", "p(class=1)"},
                {"r", morris.r},
                {"p", morris.p},
                {"delta", morris.delta},
                {"features", std::move(features)}};
  }
  fail(ErrorCode::UnknownMethod, "unknown explain method '" + method + "'");
}

}  // namespace stackliver
