#pragma once

#include <string>

#include <json.hpp>

#include "mcsched/env.hpp"

namespace mcsched {

// EnvConfig <-> JSON with the scenario-preset field names; arrays row-major.
nlohmann::json env_config_to_json(const EnvConfig& cfg);
EnvConfig env_config_from_json(const nlohmann::json& j);

EnvConfig load_env_config(const std::string& path);
void save_env_config(const EnvConfig& cfg, const std::string& path);

}  // namespace mcsched
