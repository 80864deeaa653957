#pragma once

#include <filesystem>
#include <json.hpp>

#include "meq/trainer.hpp"

namespace meq {

nlohmann::json scenario_to_json(const ScenarioConfig& cfg);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

/// Load a scenario description from a JSON file. Unknown keys are rejected.
ScenarioConfig load_scenario_file(const std::filesystem::path& path);

/// Write the resolved configuration echo.
void write_scenario_file(const std::filesystem::path& path, const ScenarioConfig& cfg);

}  // namespace meq
