#pragma once

#include <json.hpp>

#include <string>
#include <vector>

namespace mvsteady {

/// Names accepted by `preset`.
std::vector<std::string> preset_names();

/// Partial config document for a named experiment, merged over the defaults.
/// Throws ConfigError for unknown names.
nlohmann::json preset(const std::string& name);

}  // namespace mvsteady
