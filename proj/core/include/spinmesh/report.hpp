#pragma once

#include <json.hpp>
#include <string>
#include <vector>

namespace spinmesh {

using Json = nlohmann::ordered_json;

// Rounds every floating-point number in the document to 12 significant digits
// (in place), which pins report bytes across runs.
void round_floats(Json& doc);

// Serializes with rounded floats and a trailing newline.
void write_report(const std::string& path, Json doc);

// Minimal structural validator for the bundled JSON-Schema subset:
// type / properties / required / items / enum / minimum. Returns the list of
// violations (empty when the document conforms).
std::vector<std::string> validate_against_schema(const Json& doc, const Json& schema);

} // namespace spinmesh
