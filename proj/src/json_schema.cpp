#include "stackliver/json_schema.hpp"

namespace stackliver {

namespace {

using nlohmann::json;

bool type_matches(const std::string& type, const json& doc) {
  if (type == "object") return doc.is_object();
  if (type == "array") return doc.is_array();
  if (type == "string") return doc.is_string();
  if (type == "number") return doc.is_number();
  if (type == "integer") return doc.is_number_integer() || doc.is_number_unsigned();
  if (type == "boolean") return doc.is_boolean();
  if (type == "null") return doc.is_null();
  return false;
}

bool check(const json& schema, const json& doc, const std::string& at, std::string* error) {
  const auto report = [&](const std::string& message) {
    if (error) *error = at + ": " + message;
    return false;
  };

  if (schema.contains("type")) {
    const json& type = schema.at("type");
    bool ok = false;
    if (type.is_string()) {
      ok = type_matches(type.get<std::string>(), doc);
    } else {
      for (const auto& t : type) ok = ok || type_matches(t.get<std::string>(), doc);
    }
    if (!ok) return report("type mismatch, got " + std::string(doc.type_name()));
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema.at("enum")) ok = ok || (v == doc);
    if (!ok) return report("value not in enum");
  }
  if (doc.is_object()) {
    if (schema.contains("required")) {
      for (const auto& key : schema.at("required"))
        if (!doc.contains(key.get<std::string>()))
          return report("missing required key '" + key.get<std::string>() + "'");
    }
    if (schema.contains("properties")) {
      for (const auto& [key, sub] : schema.at("properties").items())
        if (doc.contains(key) && !check(sub, doc.at(key), at + "/" + key, error)) return false;
    }
    if (schema.contains("additionalProperties") && schema.at("additionalProperties").is_object()) {
      const json& sub = schema.at("additionalProperties");
      const json known = schema.value("properties", json::object());
      for (const auto& [key, value] : doc.items())
        if (!known.contains(key) && !check(sub, value, at + "/" + key, error)) return false;
    }
  }
  if (doc.is_array() && schema.contains("items")) {
    const json& sub = schema.at("items");
    for (std::size_t i = 0; i < doc.size(); ++i)
      if (!check(sub, doc[i], at + "[" + std::to_string(i) + "]", error)) return false;
  }
  return true;
}

}  // namespace

bool validate_schema(const nlohmann::json& schema, const nlohmann::json& doc, std::string* error) {
  return check(schema, doc, "$", error);
}

}  // namespace stackliver
