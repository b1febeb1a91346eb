// Copyright 2026 The optoqst Authors
// SPDX-License-Identifier: Apache-2.0

#include "optoqst/cli/schema.hpp"

#include <cmath>

#include "experiment_schema.inc"
#include "optoqst/error.hpp"

namespace optoqst::cli {

using nlohmann::json;

const json& experiment_schema() {
  static const json schema = json::parse(kExperimentSchema);
  return schema;
}

namespace {

bool type_matches(const json& v, const std::string& type) {
  if (type == "object") return v.is_object();
  if (type == "array") return v.is_array();
  if (type == "string") return v.is_string();
  if (type == "boolean") return v.is_boolean();
  if (type == "null") return v.is_null();
  if (type == "number") return v.is_number();
  if (type == "integer") {
    if (v.is_number_integer()) return true;
    return v.is_number_float() && std::floor(v.get<double>()) == v.get<double>();
  }
  throw ConfigError("schema uses unsupported type '" + type + "'");
}

const json& resolve(const json& node, const json& root) {
  if (!node.contains("$ref")) return node;
  const std::string ref = node["$ref"].get<std::string>();
  if (ref.rfind("#/", 0) != 0) throw ConfigError("schema uses unsupported $ref '" + ref + "'");
  return root.at(json::json_pointer(ref.substr(1)));
}

void check(const json& v, const json& node, const json& root, const std::string& path, std::vector<std::string>& errs) {
  const json& s = resolve(node, root);
  const std::string where = path.empty() ? "/" : path;
  if (s.contains("type") && !type_matches(v, s["type"].get<std::string>())) {
    errs.push_back(where + ": expected " + s["type"].get<std::string>());
    return;
  }
  if (s.contains("enum")) {
    bool found = false;
    for (const auto& e : s["enum"]) found = found || e == v;
    if (!found) errs.push_back(where + ": value " + v.dump() + " not in " + s["enum"].dump());
  }
  if (v.is_number()) {
    const double x = v.get<double>();
    if (s.contains("minimum") && x < s["minimum"].get<double>())
      errs.push_back(where + ": must be >= " + s["minimum"].dump());
    if (s.contains("exclusiveMinimum") && x <= s["exclusiveMinimum"].get<double>())
      errs.push_back(where + ": must be > " + s["exclusiveMinimum"].dump());
  }
  if (v.is_string() && s.contains("minLength") && v.get<std::string>().size() < s["minLength"].get<std::size_t>())
    errs.push_back(where + ": string too short");
  if (v.is_object()) {
    if (s.contains("required"))
      for (const auto& r : s["required"])
        if (!v.contains(r.get<std::string>())) errs.push_back(where + ": missing required key '" + r.get<std::string>() + "'");
    const json empty = json::object();
    const json& props = s.contains("properties") ? s["properties"] : empty;
    const bool closed = s.contains("additionalProperties") && s["additionalProperties"] == false;
    for (const auto& [key, val] : v.items()) {
      if (props.contains(key)) {
        check(val, props[key], root, path + "/" + key, errs);
      } else if (closed) {
        errs.push_back(where + ": unknown key '" + key + "'");
      }
    }
  }
  if (v.is_array()) {
    if (s.contains("minItems") && v.size() < s["minItems"].get<std::size_t>())
      errs.push_back(where + ": needs at least " + s["minItems"].dump() + " items");
    if (s.contains("maxItems") && v.size() > s["maxItems"].get<std::size_t>())
      errs.push_back(where + ": allows at most " + s["maxItems"].dump() + " items");
    if (s.contains("items"))
      for (std::size_t i = 0; i < v.size(); ++i) check(v[i], s["items"], root, path + "/" + std::to_string(i), errs);
  }
}

}  // namespace

std::vector<std::string> validate_against(const json& instance, const json& schema) {
  std::vector<std::string> errs;
  check(instance, schema, schema, "", errs);
  return errs;
}

}  // namespace optoqst::cli
