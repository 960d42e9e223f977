#pragma once

#include <json.hpp>
#include <string>

namespace stackliver {

// Minimal JSON-Schema subset: type (string or list), properties, required,
// items, enum, additionalProperties (object schema applied to every value).
// Enough to pin the report shapes without a full validator dependency.
bool validate_schema(const nlohmann::json& schema, const nlohmann::json& doc, std::string* error);

}  // namespace stackliver
