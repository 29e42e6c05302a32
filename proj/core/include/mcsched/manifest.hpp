#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace mcsched {

std::string sha1_hex(const std::string& bytes);

// Provenance record written next to every CSV an experiment command emits.
struct RunManifest {
  std::string command;
  std::string preset;
  std::uint64_t seed = 0;
  std::string config_sha1;  // hash of the resolved scenario document
  std::vector<std::string> outputs;
  std::string created_utc;

  static RunManifest make(const std::string& command, const std::string& preset,
                          std::uint64_t seed, const nlohmann::json& resolved_config);
  nlohmann::json to_json() const;
  void save(const std::string& path) const;
};

}  // namespace mcsched
