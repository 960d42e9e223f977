#pragma once

#include <json.hpp>

#include "stackliver/forest.hpp"
#include "stackliver/gbdt.hpp"
#include "stackliver/knn.hpp"
#include "stackliver/mlp.hpp"
#include "stackliver/preprocess.hpp"
#include "stackliver/stacking.hpp"
#include "stackliver/tree.hpp"

namespace stackliver {

using Json = nlohmann::json;

Json matrix_to_json(const Eigen::MatrixXd& m);
Eigen::MatrixXd matrix_from_json(const Json& j);
Json vector_to_json(const Eigen::VectorXd& v);
Eigen::VectorXd vector_from_json(const Json& j);
Json int_vector_to_json(const Eigen::VectorXi& v);
Eigen::VectorXi int_vector_from_json(const Json& j);

Json tree_to_json(const TreeModel& tree);  // nested node objects
TreeModel tree_from_json(const Json& j);

Json gbdt_params_to_json(const GbdtParams& p);
GbdtParams gbdt_params_from_json(const Json& j);
Json gbdt_to_json(const GbdtClassifier& model);
GbdtClassifier gbdt_from_json(const Json& j);

Json knn_to_json(const KnnClassifier& model);
KnnClassifier knn_from_json(const Json& j);

Json mlp_params_to_json(const MlpParams& p);
MlpParams mlp_params_from_json(const Json& j);
Json mlp_to_json(const MlpClassifier& model);  // flat weight arrays with shape headers
MlpClassifier mlp_from_json(const Json& j);

Json stack_params_to_json(const StackParams& p);
StackParams stack_params_from_json(const Json& j);
Json stack_to_json(const StackClassifier& model);
StackClassifier stack_from_json(const Json& j);

Json preprocess_state_to_json(const PreprocessState& state);
PreprocessState preprocess_state_from_json(const Json& j);

Json schema_to_json(const Schema& schema);
Schema schema_from_json(const Json& j);

}  // namespace stackliver
