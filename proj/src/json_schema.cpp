#include "safex/json_schema.hpp"

#include <cmath>
#include <map>

#include "safex/error.hpp"

namespace safex {

namespace detail {
// Generated at configure time from schemas/*.json.
extern const std::vector<std::pair<std::string, std::string>> kEmbeddedSchemas;
}  // namespace detail

namespace {

bool has_type(const Json& doc, const std::string& type) {
  if (type == "object") return doc.is_object();
  if (type == "array") return doc.is_array();
  if (type == "string") return doc.is_string();
  if (type == "boolean") return doc.is_boolean();
  if (type == "null") return doc.is_null();
  if (type == "number") return doc.is_number();
  if (type == "integer") {
    if (doc.is_number_integer()) return true;
    if (doc.is_number_float()) {
      double v = doc.get<double>();
      return std::isfinite(v) && std::floor(v) == v;
    }
    return false;
  }
  return false;
}

class Validator {
 public:
  explicit Validator(const Json& root) : root_(root) {}

  void check(const Json& schema, const Json& doc, const std::string& path) {
    if (schema.is_boolean()) {
      if (!schema.get<bool>()) fail(path, "no value allowed here");
      return;
    }
    if (schema.contains("$ref")) {
      check(resolve(schema.at("$ref").get<std::string>()), doc, path);
      return;
    }
    if (schema.contains("type")) {
      const Json& t = schema.at("type");
      bool ok = false;
      if (t.is_string()) {
        ok = has_type(doc, t.get<std::string>());
      } else {
        for (const Json& one : t) ok = ok || has_type(doc, one.get<std::string>());
      }
      if (!ok) {
        fail(path, "expected type " + t.dump() + ", got " + std::string(doc.type_name()));
        return;
      }
    }
    if (schema.contains("enum")) {
      bool found = false;
      for (const Json& v : schema.at("enum")) found = found || v == doc;
      if (!found) fail(path, "value " + doc.dump() + " not in " + schema.at("enum").dump());
    }
    if (schema.contains("const") && schema.at("const") != doc) {
      fail(path, "value must equal " + schema.at("const").dump());
    }
    if (doc.is_number()) numeric(schema, doc.get<double>(), path);
    if (doc.is_string() && schema.contains("minLength") &&
        doc.get<std::string>().size() < schema.at("minLength").get<std::size_t>()) {
      fail(path, "string too short");
    }
    if (doc.is_object()) object(schema, doc, path);
    if (doc.is_array()) array(schema, doc, path);
    if (schema.contains("anyOf")) {
      bool any = false;
      for (const Json& alt : schema.at("anyOf")) {
        Validator v(root_);
        v.check(alt, doc, path);
        if (v.errors.empty()) {
          any = true;
          break;
        }
      }
      if (!any) fail(path, "matches none of the anyOf alternatives");
    }
  }

  std::vector<std::string> errors;

 private:
  void fail(const std::string& path, const std::string& msg) { errors.push_back((path.empty() ? "/" : path) + ": " + msg); }

  const Json& resolve(const std::string& ref) {
    const std::string prefix = "#/definitions/";
    if (ref.rfind(prefix, 0) != 0) throw ConfigError("unsupported $ref " + ref);
    const Json& defs = root_.at("definitions");
    std::string name = ref.substr(prefix.size());
    if (!defs.contains(name)) throw ConfigError("unresolved $ref " + ref);
    return defs.at(name);
  }

  void numeric(const Json& s, double v, const std::string& path) {
    if (s.contains("minimum") && v < s.at("minimum").get<double>()) fail(path, "below minimum " + s.at("minimum").dump());
    if (s.contains("maximum") && v > s.at("maximum").get<double>()) fail(path, "above maximum " + s.at("maximum").dump());
    if (s.contains("exclusiveMinimum") && v <= s.at("exclusiveMinimum").get<double>()) {
      fail(path, "must exceed " + s.at("exclusiveMinimum").dump());
    }
    if (s.contains("exclusiveMaximum") && v >= s.at("exclusiveMaximum").get<double>()) {
      fail(path, "must be below " + s.at("exclusiveMaximum").dump());
    }
  }

  void object(const Json& s, const Json& doc, const std::string& path) {
    if (s.contains("required")) {
      for (const Json& key : s.at("required")) {
        if (!doc.contains(key.get<std::string>())) fail(path, "missing required property \"" + key.get<std::string>() + "\"");
      }
    }
    const Json* props = s.contains("properties") ? &s.at("properties") : nullptr;
    for (auto it = doc.begin(); it != doc.end(); ++it) {
      std::string child = path + "/" + it.key();
      if (props && props->contains(it.key())) {
        check(props->at(it.key()), it.value(), child);
      } else if (s.contains("additionalProperties")) {
        const Json& extra = s.at("additionalProperties");
        if (extra.is_boolean() && !extra.get<bool>()) {
          fail(child, "unknown property");
        } else if (extra.is_object()) {
          check(extra, it.value(), child);
        }
      }
    }
  }

  void array(const Json& s, const Json& doc, const std::string& path) {
    if (s.contains("minItems") && doc.size() < s.at("minItems").get<std::size_t>()) {
      fail(path, "needs at least " + s.at("minItems").dump() + " items");
    }
    if (s.contains("maxItems") && doc.size() > s.at("maxItems").get<std::size_t>()) {
      fail(path, "allows at most " + s.at("maxItems").dump() + " items");
    }
    if (s.contains("items")) {
      for (std::size_t i = 0; i < doc.size(); ++i) check(s.at("items"), doc.at(i), path + "/" + std::to_string(i));
    }
  }

  const Json& root_;
};

const std::map<std::string, Json>& registry() {
  static const std::map<std::string, Json> schemas = [] {
    std::map<std::string, Json> m;
    for (const auto& [name, text] : detail::kEmbeddedSchemas) m.emplace(name, Json::parse(text));
    return m;
  }();
  return schemas;
}

}  // namespace

std::vector<std::string> validate_json(const Json& schema, const Json& document) {
  Validator v(schema);
  v.check(schema, document, "");
  return v.errors;
}

const Json& builtin_schema(const std::string& name) {
  const auto& reg = registry();
  auto it = reg.find(name);
  if (it == reg.end()) throw ConfigError("no schema named " + name);
  return it->second;
}

std::vector<std::string> builtin_schema_names() {
  std::vector<std::string> out;
  for (const auto& [name, schema] : registry()) out.push_back(name);
  return out;
}

void require_valid(const std::string& schema_name, const Json& document) {
  std::vector<std::string> errors = validate_json(builtin_schema(schema_name), document);
  if (errors.empty()) return;
  std::string msg = schema_name + " failed schema validation:";
  for (const std::string& e : errors) msg += "\n  " + e;
  throw ConfigError(msg);
}

}  // namespace safex
