#include "spinmesh/report.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "spinmesh/errors.hpp"

namespace spinmesh {

void round_floats(Json& doc) {
  if (doc.is_number_float()) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", doc.get<double>());
    doc = std::strtod(buf, nullptr);
  } else if (doc.is_object() || doc.is_array()) {
    for (auto& item : doc) round_floats(item);
  }
}

void write_report(const std::string& path, Json doc) {
  round_floats(doc);
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << doc.dump(1) << "\n";
}

namespace {

bool type_matches(const Json& doc, const std::string& type) {
  if (type == "object") return doc.is_object();
  if (type == "array") return doc.is_array();
  if (type == "string") return doc.is_string();
  if (type == "number") return doc.is_number();
  if (type == "integer") return doc.is_number_integer();
  if (type == "boolean") return doc.is_boolean();
  if (type == "null") return doc.is_null();
  return false;
}

void validate(const Json& doc, const Json& schema, const std::string& where,
              std::vector<std::string>& errors) {
  if (schema.contains("type")) {
    const std::string type = schema["type"].get<std::string>();
    if (!type_matches(doc, type)) {
      errors.push_back(where + ": expected " + type);
      return;
    }
  }
  if (schema.contains("enum")) {
    bool ok = false;
    for (const auto& v : schema["enum"])
      if (v == doc) ok = true;
    if (!ok) errors.push_back(where + ": value not in enum");
  }
  if (schema.contains("minimum") && doc.is_number() &&
      doc.get<double>() < schema["minimum"].get<double>())
    errors.push_back(where + ": below minimum");
  if (schema.contains("required"))
    for (const auto& key : schema["required"])
      if (!doc.contains(key.get<std::string>()))
        errors.push_back(where + ": missing required key '" + key.get<std::string>() + "'");
  if (schema.contains("properties") && doc.is_object()) {
    for (const auto& [key, sub] : schema["properties"].items())
      if (doc.contains(key)) validate(doc[key], sub, where + "/" + key, errors);
  }
  if (schema.contains("items") && doc.is_array())
    for (std::size_t i = 0; i < doc.size(); ++i)
      validate(doc[i], schema["items"], where + "[" + std::to_string(i) + "]", errors);
}

} // namespace

std::vector<std::string> validate_against_schema(const Json& doc, const Json& schema) {
  std::vector<std::string> errors;
  validate(doc, schema, "$", errors);
  return errors;
}

} // namespace spinmesh
