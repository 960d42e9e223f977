#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>
#include <string>

#include "stackliver/error.hpp"
#include "stackliver/pipeline.hpp"

using namespace stackliver;

namespace {

struct SharedOptions {
  std::string config_path;
  std::string data;
  std::string out;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int threads = -1;
  std::string format;
};

void add_shared(CLI::App* cmd, SharedOptions& opts) {
  cmd->add_option("--config", opts.config_path, "Pipeline config JSON");
  cmd->add_option("--data", opts.data, "Dataset CSV path");
  cmd->add_option("--out", opts.out, "Output directory");
  cmd->add_option("--seed", opts.seed, "Master seed")->each([&](const std::string&) {
    opts.seed_set = true;
  });
  cmd->add_option("--threads", opts.threads, "Worker cap; 1 = fully serial");
  cmd->add_option("--format", opts.format, "Report format: json or csv")
      ->check(CLI::IsMember({"json", "csv"}));
}

PipelineConfig build_config(const SharedOptions& opts) {
  PipelineConfig config =
      opts.config_path.empty() ? PipelineConfig::defaults() : PipelineConfig::load(opts.config_path);
  if (!opts.data.empty()) config.data = opts.data;
  if (!opts.out.empty()) config.out = opts.out;
  if (opts.seed_set) config.seed = opts.seed;
  if (opts.threads >= 0) config.threads = opts.threads;
  if (!opts.format.empty()) config.format = opts.format;
  if (const char* env_out = std::getenv("STACKLIVER_OUT"); env_out && *env_out)
    config.out = env_out;
  config.validate();
  return config;
}

void print_stage_summary(const PipelineResult& result, Stage last) {
  if (last >= Stage::Anova && !result.anova_report.is_null())
    std::cout << "anova: kept " << result.anova_report.at("kept").size() << ", dropped "
              << result.anova_report.at("dropped").size() << "\n";
  if (last >= Stage::Rfecv && !result.rfecv_report.is_null()) {
    std::cout << "selected:";
    for (const auto& f : result.rfecv_report.at("selected"))
      std::cout << " '" << f.get<std::string>() << "'";
    std::cout << "\n";
  }
  if (last >= Stage::Evaluate && !result.metrics_report.is_null()) {
    const auto& stack_test = result.metrics_report.at("models").at("stack").at("test");
    std::cout << "stack test accuracy " << stack_test.at("accuracy").get<double>() << ", kappa "
              << stack_test.at("kappa").get<double>() << ", auc "
              << stack_test.at("auc").get<double>() << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"stackliver: stacked-ensemble liver disease classification pipeline"};
  app.require_subcommand(1);

  SharedOptions shared;

  struct StageCommand {
    const char* name;
    const char* description;
    Stage stage;
  };
  const StageCommand stage_commands[] = {
      {"run-all", "Run the full pipeline and write the report tree", Stage::Explain},
      {"preprocess", "Ingest, clean, split, winsorize and standardize", Stage::Preprocess},
      {"anova", "Run the significance filter (writes anova.json)", Stage::Anova},
      {"select", "Run RFE-CV feature selection (writes rfecv.json)", Stage::Rfecv},
      {"train", "Train baselines and the stacked model (writes model.json)", Stage::Train},
      {"evaluate", "Evaluate on train/test and cross-validate (writes metrics.json)", Stage::Evaluate},
      {"cv", "Cross-validate all models (writes cv.json)", Stage::Evaluate},
  };
  for (const auto& sc : stage_commands) {
    CLI::App* cmd = app.add_subcommand(sc.name, sc.description);
    add_shared(cmd, shared);
    cmd->callback([&shared, &sc] {
      const PipelineConfig config = build_config(shared);
      const PipelineResult result = run_pipeline(config, sc.stage);
      print_stage_summary(result, sc.stage);
      std::cout << "reports in " << config.out << "\n";
    });
  }

  std::string bundle_path, input_path, output_path, method;
  int rows = -1;

  CLI::App* predict = app.add_subcommand("predict", "Apply a saved model bundle to a CSV");
  add_shared(predict, shared);
  predict->add_option("--bundle", bundle_path, "Model bundle JSON")->required();
  predict->add_option("--input", input_path, "Input CSV")->required();
  predict->add_option("--output", output_path, "Predictions output path")->required();
  predict->callback([&] {
    const std::string format = shared.format.empty() ? "csv" : shared.format;
    const PredictStats stats = cmd_predict(bundle_path, input_path, output_path, format);
    std::cout << "rows " << stats.rows << ", inference_seconds " << stats.inference_seconds << "\n";
  });

  CLI::App* explain = app.add_subcommand("explain", "Explain bundle predictions on a CSV");
  add_shared(explain, shared);
  explain->add_option("--bundle", bundle_path, "Model bundle JSON")->required();
  explain->add_option("--input", input_path, "Input CSV")->required();
  explain->add_option("--method", method, "lime, shap or morris")->required();
  explain->add_option("--rows", rows, "Rows to explain (method-specific default)");
  explain->add_option("--output", output_path, "Write report here instead of stdout");
  explain->callback([&] {
    const std::uint64_t seed = shared.seed_set ? shared.seed : 42;
    const Json report = cmd_explain(bundle_path, input_path, method, rows, seed);
    if (output_path.empty()) {
      std::cout << report.dump(2) << "\n";
    } else {
      std::ofstream out(output_path, std::ios::binary);
      out << report.dump(2) << "\n";
    }
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp" ||
        e.get_name() == "CallForVersion")
      return app.exit(e);
    app.exit(e);
    return 2;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return error_exit_code(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
