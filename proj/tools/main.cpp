#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "mcsched/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Multicast scheduling experiments: training, baselines, bounds, sweeps"};
  app.require_subcommand(1);

  mcsched::CommandOptions options;

  const auto add_common = [&options](CLI::App* cmd) {
    cmd->add_option("--preset", options.preset, "preset name (S1..S6) or path to a JSON file")
        ->required();
    cmd->add_option("--preset-dir", options.preset_dir, "directory holding preset files");
    cmd->add_option("--seed", options.seed, "override the scenario seed");
    cmd->add_option("--out", options.out_dir, "output directory");
    cmd->add_option("--config", options.config_override, "JSON merge patch applied to the preset");
  };

  CLI::App* train = app.add_subcommand("train", "train the scheduler on a preset");
  add_common(train);
  train->add_option("--episodes", options.episodes, "override the episode count");
  train->add_option("--algo", options.algo, "de (constrained) or mappo (ablation)")
      ->check(CLI::IsMember({"de", "mappo"}));

  CLI::App* tradeoff = app.add_subcommand("tradeoff", "energy/latency sweep over V");
  add_common(tradeoff);
  tradeoff->add_option("--v-list", options.v_list, "tradeoff weights to sweep")->delimiter(',');
  tradeoff->add_option("--horizon", options.horizon, "evaluation slots per point");
  tradeoff->add_option("--algos", options.algos, "algorithms to include")->delimiter(',');
  tradeoff->add_option("--episodes", options.episodes, "override the episode count");
  tradeoff->add_option("--grid-step", options.grid_step, "latency-rate curve resolution");
  tradeoff->add_option("--f-horizon", options.f_horizon, "Monte Carlo slots per threshold");

  CLI::App* baseline = app.add_subcommand("baseline", "run one classical baseline");
  add_common(baseline);
  baseline->add_option("--which", options.which, "rr | stopping | rvi | mappo")
      ->required()
      ->check(CLI::IsMember({"rr", "stopping", "rvi", "mappo"}));
  baseline->add_option("--horizon", options.horizon, "evaluation slots");

  CLI::App* bound = app.add_subcommand("bound", "compute the performance upper bound");
  add_common(bound);
  bound->add_option("--v", options.v_override, "tradeoff weight (defaults to the preset's)");
  bound->add_option("--grid-step", options.grid_step, "latency-rate curve resolution");
  bound->add_option("--f-horizon", options.f_horizon,
                    "Monte Carlo slots per threshold (0 = exact evaluator)");

  CLI::App* verify = app.add_subcommand("verify", "run the property checks on a preset");
  add_common(verify);

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return mcsched::cmd_train(options);
    if (tradeoff->parsed()) return mcsched::cmd_tradeoff(options);
    if (baseline->parsed()) return mcsched::cmd_baseline(options);
    if (bound->parsed()) return mcsched::cmd_bound(options);
    if (verify->parsed()) return mcsched::cmd_verify(options);
  } catch (const mcsched::CommandError& e) {
    nlohmann::json err{{"code", e.code()}, {"message", e.what()}};
    std::cerr << "error " << err.dump() << "\n";
    return 2;
  } catch (const std::exception& e) {
    nlohmann::json err{{"code", "internal"}, {"message", e.what()}};
    std::cerr << "error " << err.dump() << "\n";
    return 2;
  }
  return 1;
}
