#include "stackliver/model_io.hpp"

#include "stackliver/error.hpp"

namespace stackliver {

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    Json row = Json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(rows)}};
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  Eigen::MatrixXd m(j.at("rows").get<Eigen::Index>(), j.at("cols").get<Eigen::Index>());
  const auto& data = j.at("data");
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      m(i, c) = data[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)].get<double>();
  return m;
}

Json vector_to_json(const Eigen::VectorXd& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXd vector_from_json(const Json& j) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  return v;
}

Json int_vector_to_json(const Eigen::VectorXi& v) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Eigen::VectorXi int_vector_from_json(const Json& j) {
  Eigen::VectorXi v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<int>();
  return v;
}

namespace {

Json node_to_json(const TreeModel& tree, int at) {
  const TreeNode& node = tree.nodes[static_cast<std::size_t>(at)];
  if (node.is_leaf()) return Json{{"n", node.n_samples}, {"value", node.value}};
  return Json{{"n", node.n_samples},
              {"feature", node.feature},
              {"threshold", node.threshold},
              {"left", node_to_json(tree, node.left)},
              {"right", node_to_json(tree, node.right)}};
}

int node_from_json(const Json& j, TreeModel& tree) {
  const int id = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  tree.nodes.back().n_samples = j.at("n").get<std::int64_t>();
  if (j.contains("feature")) {
    tree.nodes[static_cast<std::size_t>(id)].feature = j.at("feature").get<int>();
    tree.nodes[static_cast<std::size_t>(id)].threshold = j.at("threshold").get<double>();
    const int left = node_from_json(j.at("left"), tree);
    const int right = node_from_json(j.at("right"), tree);
    tree.nodes[static_cast<std::size_t>(id)].left = left;
    tree.nodes[static_cast<std::size_t>(id)].right = right;
  } else {
    tree.nodes[static_cast<std::size_t>(id)].value = j.at("value").get<double>();
  }
  return id;
}

}  // namespace

Json tree_to_json(const TreeModel& tree) {
  if (tree.empty()) return Json();
  return node_to_json(tree, 0);
}

TreeModel tree_from_json(const Json& j) {
  TreeModel tree;
  if (!j.is_null()) node_from_json(j, tree);
  return tree;
}

Json gbdt_params_to_json(const GbdtParams& p) {
  return Json{{"rounds", p.rounds},
              {"learning_rate", p.learning_rate},
              {"growth", p.growth == GrowthPolicy::DepthWise ? "depth_wise" : "leaf_wise"},
              {"max_depth", p.max_depth},
              {"max_leaves", p.max_leaves},
              {"lambda_l2", p.lambda_l2},
              {"gamma", p.gamma},
              {"row_subsample", p.row_subsample},
              {"feature_subsample", p.feature_subsample},
              {"min_samples_leaf", p.min_samples_leaf}};
}

GbdtParams gbdt_params_from_json(const Json& j) {
  GbdtParams p;
  p.rounds = j.at("rounds").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  const std::string growth = j.at("growth").get<std::string>();
  if (growth == "depth_wise") {
    p.growth = GrowthPolicy::DepthWise;
  } else if (growth == "leaf_wise") {
    p.growth = GrowthPolicy::LeafWise;
  } else {
    fail(ErrorCode::ConfigError, "unknown growth policy '" + growth + "'");
  }
  p.max_depth = j.at("max_depth").get<int>();
  p.max_leaves = j.at("max_leaves").get<int>();
  p.lambda_l2 = j.at("lambda_l2").get<double>();
  p.gamma = j.at("gamma").get<double>();
  p.row_subsample = j.at("row_subsample").get<double>();
  p.feature_subsample = j.at("feature_subsample").get<double>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  return p;
}

Json gbdt_to_json(const GbdtClassifier& model) {
  Json trees = Json::array();
  for (const auto& tree : model.trees()) trees.push_back(tree_to_json(tree));
  return Json{{"kind", "gbdt"},
              {"params", gbdt_params_to_json(model.params())},
              {"base_score", model.base_score()},
              {"n_features", model.n_features()},
              {"trees", std::move(trees)}};
}

GbdtClassifier gbdt_from_json(const Json& j) {
  std::vector<TreeModel> trees;
  for (const auto& t : j.at("trees")) trees.push_back(tree_from_json(t));
  return GbdtClassifier::restore(gbdt_params_from_json(j.at("params")),
                                 j.at("base_score").get<double>(),
                                 j.at("n_features").get<Eigen::Index>(), std::move(trees));
}

Json knn_to_json(const KnnClassifier& model) {
  return Json{{"kind", "knn"},
              {"params", Json{{"k", model.params().k}}},
              {"X", matrix_to_json(model.train_X())},
              {"y", int_vector_to_json(model.train_y())}};
}

KnnClassifier knn_from_json(const Json& j) {
  KnnParams params;
  params.k = j.at("params").at("k").get<int>();
  return KnnClassifier::restore(params, matrix_from_json(j.at("X")),
                                int_vector_from_json(j.at("y")));
}

Json mlp_params_to_json(const MlpParams& p) {
  return Json{{"hidden", p.hidden},
              {"alpha", p.alpha},
              {"max_epochs", p.max_epochs},
              {"batch_size", p.batch_size},
              {"learning_rate", p.learning_rate},
              {"beta1", p.beta1},
              {"beta2", p.beta2},
              {"epsilon", p.epsilon},
              {"tol", p.tol},
              {"patience", p.patience}};
}

MlpParams mlp_params_from_json(const Json& j) {
  MlpParams p;
  p.hidden = j.at("hidden").get<std::vector<int>>();
  p.alpha = j.at("alpha").get<double>();
  p.max_epochs = j.at("max_epochs").get<int>();
  p.batch_size = j.at("batch_size").get<int>();
  p.learning_rate = j.at("learning_rate").get<double>();
  p.beta1 = j.at("beta1").get<double>();
  p.beta2 = j.at("beta2").get<double>();
  p.epsilon = j.at("epsilon").get<double>();
  p.tol = j.at("tol").get<double>();
  p.patience = j.at("patience").get<int>();
  return p;
}

Json mlp_to_json(const MlpClassifier& model) {
  Json layers = Json::array();
  for (std::size_t l = 0; l < model.weights().size(); ++l) {
    const auto& w = model.weights()[l];
    Json flat = Json::array();
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) flat.push_back(w(r, c));
    layers.push_back(Json{{"rows", w.rows()},
                          {"cols", w.cols()},
                          {"weights", std::move(flat)},
                          {"bias", vector_to_json(model.biases()[l])}});
  }
  return Json{{"kind", "mlp"}, {"params", mlp_params_to_json(model.params())}, {"layers", layers}};
}

MlpClassifier mlp_from_json(const Json& j) {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  for (const auto& layer : j.at("layers")) {
    Eigen::MatrixXd w(layer.at("rows").get<Eigen::Index>(), layer.at("cols").get<Eigen::Index>());
    const auto& flat = layer.at("weights");
    std::size_t at = 0;
    for (Eigen::Index r = 0; r < w.rows(); ++r)
      for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = flat[at++].get<double>();
    weights.push_back(std::move(w));
    biases.push_back(vector_from_json(layer.at("bias")));
  }
  return MlpClassifier::restore(mlp_params_from_json(j.at("params")), std::move(weights),
                                std::move(biases));
}

Json stack_params_to_json(const StackParams& p) {
  return Json{{"base_gbdt", gbdt_params_to_json(p.base_gbdt)},
              {"base_knn", Json{{"k", p.base_knn.k}}},
              {"meta", gbdt_params_to_json(p.meta)},
              {"k_folds", p.k_folds}};
}

StackParams stack_params_from_json(const Json& j) {
  StackParams p;
  p.base_gbdt = gbdt_params_from_json(j.at("base_gbdt"));
  p.base_knn.k = j.at("base_knn").at("k").get<int>();
  p.meta = gbdt_params_from_json(j.at("meta"));
  p.k_folds = j.at("k_folds").get<int>();
  return p;
}

Json stack_to_json(const StackClassifier& model) {
  return Json{{"kind", "stack"},
              {"params", stack_params_to_json(model.params())},
              {"base_gbdt", gbdt_to_json(model.base_gbdt())},
              {"base_knn", knn_to_json(model.base_knn())},
              {"meta", gbdt_to_json(model.meta())}};
}

StackClassifier stack_from_json(const Json& j) {
  return StackClassifier::restore(stack_params_from_json(j.at("params")),
                                  gbdt_from_json(j.at("base_gbdt")), knn_from_json(j.at("base_knn")),
                                  gbdt_from_json(j.at("meta")));
}

Json preprocess_state_to_json(const PreprocessState& state) {
  Json encoders = Json::object();
  for (const auto& [name, enc] : state.encoders)
    encoders[name] = Json{{"mode", enc.mode}, {"categories", enc.categories}};
  Json fences = Json::object();
  for (const auto& [name, f] : state.fences) fences[name] = Json{{"lo", f.lo}, {"hi", f.hi}};
  Json scale = Json::object();
  for (const auto& [name, ms] : state.scale)
    scale[name] = Json{{"mean", ms.mean}, {"std", ms.std_dev}, {"constant", ms.constant}};
  return Json{{"fitted", state.fitted},
              {"encoders", std::move(encoders)},
              {"fences", std::move(fences)},
              {"scale", std::move(scale)}};
}

PreprocessState preprocess_state_from_json(const Json& j) {
  PreprocessState state;
  state.fitted = j.at("fitted").get<bool>();
  for (const auto& [name, enc] : j.at("encoders").items()) {
    CategoricalEncoder encoder;
    encoder.mode = enc.at("mode").get<std::string>();
    encoder.categories = enc.at("categories").get<std::vector<std::string>>();
    state.encoders[name] = std::move(encoder);
  }
  for (const auto& [name, f] : j.at("fences").items())
    state.fences[name] = Fences{f.at("lo").get<double>(), f.at("hi").get<double>()};
  for (const auto& [name, ms] : j.at("scale").items()) {
    MeanStd m;
    m.mean = ms.at("mean").get<double>();
    m.std_dev = ms.at("std").get<double>();
    m.constant = ms.at("constant").get<bool>();
    state.scale[name] = m;
  }
  return state;
}

Json schema_to_json(const Schema& schema) {
  Json columns = Json::array();
  for (const auto& col : schema.columns)
    columns.push_back(Json{{"name", col.name}, {"kind", column_kind_name(col.kind)}});
  return Json{{"columns", std::move(columns)}, {"label_positive", schema.label_positive}};
}

Schema schema_from_json(const Json& j) {
  Schema schema;
  for (const auto& col : j.at("columns"))
    schema.columns.push_back(
        {col.at("name").get<std::string>(), column_kind_from_name(col.at("kind").get<std::string>())});
  schema.label_positive = j.at("label_positive").get<int>();
  schema.validate();
  return schema;
}

}  // namespace stackliver
