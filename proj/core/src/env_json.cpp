#include "mcsched/env_json.hpp"

#include <fstream>

namespace mcsched {

namespace {

template <typename T>
nlohmann::json grid_to_json(const Grid<T>& g) {
  nlohmann::json rows = nlohmann::json::array();
  for (int r = 0; r < g.rows(); ++r) rows.push_back(g.row(r));
  return rows;
}

template <typename T>
Grid<T> grid_from_json(const nlohmann::json& j) {
  std::vector<std::vector<T>> rows;
  for (const auto& row : j) rows.push_back(row.get<std::vector<T>>());
  return Grid<T>::from_rows(rows);
}

}  // namespace

nlohmann::json env_config_to_json(const EnvConfig& cfg) {
  nlohmann::json j;
  j["n_messages"] = cfg.n_messages;
  j["n_channels"] = cfg.n_channels;
  j["buffer_len"] = cfg.buffer_len;
  j["arrival_rates"] = cfg.arrival_rates;
  j["duration_table"] = grid_to_json(cfg.duration_table);
  j["energy_const"] = grid_to_json(cfg.energy_const);
  j["tradeoff_v"] = cfg.tradeoff_v;
  j["penalty_fn"] = grid_to_json(cfg.penalty_fn);
  j["gain_support"] = cfg.gain_support;
  j["seed"] = cfg.seed;
  return j;
}

EnvConfig env_config_from_json(const nlohmann::json& j) {
  EnvConfig cfg;
  cfg.n_messages = j.at("n_messages").get<int>();
  cfg.n_channels = j.at("n_channels").get<int>();
  cfg.buffer_len = j.at("buffer_len").get<int>();
  cfg.arrival_rates = j.at("arrival_rates").get<std::vector<double>>();
  cfg.duration_table = grid_from_json<int>(j.at("duration_table"));
  cfg.energy_const = grid_from_json<double>(j.at("energy_const"));
  cfg.tradeoff_v = j.at("tradeoff_v").get<double>();
  cfg.penalty_fn = grid_from_json<double>(j.at("penalty_fn"));
  cfg.gain_support = j.at("gain_support").get<std::vector<double>>();
  cfg.seed = j.at("seed").get<std::uint64_t>();
  cfg.validate();
  return cfg;
}

EnvConfig load_env_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  nlohmann::json j;
  in >> j;
  return env_config_from_json(j);
}

void save_env_config(const EnvConfig& cfg, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write config file: " + path);
  out << env_config_to_json(cfg).dump(2) << "\n";
}

}  // namespace mcsched
