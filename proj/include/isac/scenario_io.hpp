#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "isac/radar_params.hpp"
#include "isac/scene.hpp"

namespace isac {

/// Parses scenario JSON. Syntax errors report line:column; schema and invariant
/// errors report the field path and the violated rule. Throws ScenarioError.
ScenarioScript parse_scenario(std::string_view text, const DerivedParams& params,
                              std::string_view source_name = "<scenario>");

ScenarioScript load_scenario(const std::filesystem::path& path, const DerivedParams& params);

std::string scenario_to_json(const ScenarioScript& script);

void save_scenario(const ScenarioScript& script, const std::filesystem::path& path);

}  // namespace isac
