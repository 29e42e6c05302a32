#include "mcsched/presets.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "mcsched/env_json.hpp"

#ifndef MCSCHED_SOURCE_PRESET_DIR
#define MCSCHED_SOURCE_PRESET_DIR "presets"
#endif

namespace mcsched {

namespace {

Activation activation_from_string(const std::string& s) {
  if (s == "tanh") return Activation::kTanh;
  if (s == "relu") return Activation::kRelu;
  throw std::runtime_error("preset: unknown activation " + s);
}

std::string activation_to_string(Activation a) {
  return a == Activation::kTanh ? "tanh" : "relu";
}

}  // namespace

ScenarioPreset preset_from_json(const nlohmann::json& doc) {
  ScenarioPreset preset;
  preset.name = doc.value("name", "");
  preset.train.env = env_config_from_json(doc);

  if (doc.contains("train")) {
    const auto& t = doc.at("train");
    preset.train.episodes = t.value("episodes", preset.train.episodes);
    preset.train.eval_interval = t.value("eval_interval", preset.train.eval_interval);
    preset.train.actor_hidden = t.value("actor_hidden", preset.train.actor_hidden);
    preset.train.critic_hidden = t.value("critic_hidden", preset.train.critic_hidden);
    if (t.contains("activation"))
      preset.train.activation = activation_from_string(t.at("activation").get<std::string>());
    if (t.contains("hyper")) {
      const auto& h = t.at("hyper");
      PpoHyper& hy = preset.train.hyper;
      hy.n_buffer = h.value("n_buffer", hy.n_buffer);
      hy.n_updates = h.value("n_updates", hy.n_updates);
      hy.discount = h.value("discount", hy.discount);
      hy.clip = h.value("clip", hy.clip);
      hy.value_coeff = h.value("value_coeff", hy.value_coeff);
      hy.entropy_coeff = h.value("entropy_coeff", hy.entropy_coeff);
      hy.learning_rate = h.value("learning_rate", hy.learning_rate);
      hy.normalize_advantage = h.value("normalize_advantage", hy.normalize_advantage);
    }
  }
  if (doc.contains("baselines")) {
    preset.rvi_cap = doc.at("baselines").value("rvi_cap", 0);
  }
  preset.train.validate();
  return preset;
}

nlohmann::json preset_to_json(const ScenarioPreset& preset) {
  nlohmann::json doc = env_config_to_json(preset.train.env);
  doc["name"] = preset.name;
  nlohmann::json t;
  t["episodes"] = preset.train.episodes;
  t["eval_interval"] = preset.train.eval_interval;
  t["actor_hidden"] = preset.train.actor_hidden;
  t["critic_hidden"] = preset.train.critic_hidden;
  t["activation"] = activation_to_string(preset.train.activation);
  nlohmann::json h;
  h["n_buffer"] = preset.train.hyper.n_buffer;
  h["n_updates"] = preset.train.hyper.n_updates;
  h["discount"] = preset.train.hyper.discount;
  h["clip"] = preset.train.hyper.clip;
  h["value_coeff"] = preset.train.hyper.value_coeff;
  h["entropy_coeff"] = preset.train.hyper.entropy_coeff;
  h["learning_rate"] = preset.train.hyper.learning_rate;
  h["normalize_advantage"] = preset.train.hyper.normalize_advantage;
  t["hyper"] = h;
  doc["train"] = t;
  if (preset.rvi_cap > 0) doc["baselines"] = nlohmann::json{{"rvi_cap", preset.rvi_cap}};
  return doc;
}

std::string default_preset_dir() {
  if (const char* env = std::getenv("MCSCHED_PRESET_DIR"); env && *env) return env;
  return MCSCHED_SOURCE_PRESET_DIR;
}

ScenarioPreset load_preset(const std::string& name_or_path, const std::string& preset_dir) {
  namespace fs = std::filesystem;
  fs::path path = name_or_path;
  if (!fs::exists(path)) {
    const fs::path dir = preset_dir.empty() ? fs::path(default_preset_dir()) : fs::path(preset_dir);
    path = dir / (name_or_path + ".json");
  }
  std::ifstream in(path);
  if (!in) throw std::runtime_error("unknown preset: " + name_or_path);
  nlohmann::json doc;
  in >> doc;
  ScenarioPreset preset = preset_from_json(doc);
  if (preset.name.empty()) preset.name = path.stem().string();
  return preset;
}

}  // namespace mcsched
