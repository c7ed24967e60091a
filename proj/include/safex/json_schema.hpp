#pragma once

#include <string>
#include <vector>

#include "safex/io.hpp"

namespace safex {

/// Draft-07 subset: type, enum, const, properties, required, additionalProperties, items,
/// minItems, maxItems, minimum, maximum, exclusiveMinimum, exclusiveMaximum, minLength, anyOf,
/// and local "$ref": "#/definitions/...". Returns one "path: message" line per violation.
std::vector<std::string> validate_json(const Json& schema, const Json& document);

/// Schemas shipped with the library: "run_config", "scenario", "summary", "log", "complexity_params".
const Json& builtin_schema(const std::string& name);
std::vector<std::string> builtin_schema_names();

/// Throws ConfigError listing every violation.
void require_valid(const std::string& schema_name, const Json& document);

}  // namespace safex
