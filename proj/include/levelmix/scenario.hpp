#pragma once

#include <string>
#include <vector>

#include "levelmix/model.hpp"

namespace levelmix {

/// Loads a scenario JSON file (schema_version 1).  Unknown keys are ignored
/// so scenario files can carry annotations such as constant sources.
SystemSpec load_scenario(const std::string& path);

/// Same, applying "key.path=value" overrides to the JSON document before
/// parsing (e.g. "lower.hyperfine_A_MHz=0", "polarization_q=-1").
SystemSpec load_scenario_with_overrides(const std::string& path,
                                        const std::vector<std::string>& sets);

/// Parses a scenario from JSON text (used by tests and the loader).
SystemSpec scenario_from_json_text(const std::string& text);

/// Serializes a spec back to schema_version-1 JSON text.
std::string scenario_to_json_text(const SystemSpec& spec);

}  // namespace levelmix
