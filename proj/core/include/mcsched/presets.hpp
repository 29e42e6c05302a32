#pragma once

#include <string>

#include <json.hpp>

#include "mcsched/trainer.hpp"

namespace mcsched {

// A shipped scenario: environment, training setup, and baseline knobs.
struct ScenarioPreset {
  std::string name;
  TrainConfig train;  // carries the EnvConfig
  int rvi_cap = 0;    // aggregate-count cap for the tabular baseline; 0 = n/a
};

// Preset files are EnvConfig documents with optional "name", "train" and
// "baselines" sections.
ScenarioPreset preset_from_json(const nlohmann::json& doc);
nlohmann::json preset_to_json(const ScenarioPreset& preset);

// Resolution order: explicit dir argument, MCSCHED_PRESET_DIR, the source
// tree's presets/ directory.
std::string default_preset_dir();

// Accepts a preset name (S1..S6) resolved against the preset directory, or a
// direct path to a preset file.
ScenarioPreset load_preset(const std::string& name_or_path, const std::string& preset_dir = "");

}  // namespace mcsched
