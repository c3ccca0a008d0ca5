#pragma once

#include <nlohmann/json_fwd.hpp>

namespace gil {

/// JSON value that keeps keys in insertion order, so files follow the
/// documented schemas field by field.
using Json = nlohmann::ordered_json;

}  // namespace gil
