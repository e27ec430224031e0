#pragma once

#include <ostream>
#include <string>

#include "json.hpp"

namespace rankmatch {

/// Locale-independent double formatting at 17 significant digits; parses
/// back to the identical bit pattern.
std::string format_double(double v);

/// Strict full-string parse; throws ParseError on trailing garbage.
double parse_double(const std::string& text);

/// Serializes a JSON tree with doubles rendered by format_double, keys in
/// insertion order, two-space indentation. Output is byte-deterministic.
void write_json(std::ostream& out, const nlohmann::ordered_json& value, int indent = 0);
std::string json_to_string(const nlohmann::ordered_json& value);

}  // namespace rankmatch
