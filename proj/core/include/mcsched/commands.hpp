#pragma once

#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace mcsched {

// Command failure with a stable machine-readable code.
class CommandError : public std::runtime_error {
 public:
  CommandError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct CommandOptions {
  std::string preset;
  std::string preset_dir;
  std::uint64_t seed = 0;  // 0 keeps the preset seed
  std::string out_dir = "out";
  std::vector<double> v_list;
  long horizon = 100000;
  std::string which;  // baseline selector: rr | stopping | rvi | mappo
  double v_override = std::numeric_limits<double>::quiet_NaN();
  std::string config_override;  // JSON merge patch file
  int episodes = -1;            // -1 keeps the preset episode count
  std::string algo = "de";     // de | mappo
  std::vector<std::string> algos;  // tradeoff algorithms; empty = applicable set
  double grid_step = 0.02;
  long f_horizon = 1000000;  // Monte Carlo slots per threshold in curve building
};

int cmd_train(const CommandOptions& options);
int cmd_tradeoff(const CommandOptions& options);
int cmd_baseline(const CommandOptions& options);
int cmd_bound(const CommandOptions& options);
int cmd_verify(const CommandOptions& options);

}  // namespace mcsched
