#include "mcsched/commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "mcsched/baselines.hpp"
#include "mcsched/bound.hpp"
#include "mcsched/de.hpp"
#include "mcsched/env_json.hpp"
#include "mcsched/manifest.hpp"
#include "mcsched/presets.hpp"
#include "mcsched/trainer.hpp"

namespace mcsched {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.10g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw CommandError("io_error", "cannot write " + path);
  f << content;
}

struct ResolvedScenario {
  ScenarioPreset preset;
  nlohmann::json document;  // after overrides, for hashing
};

ResolvedScenario resolve_scenario(const CommandOptions& options) {
  if (options.preset.empty()) throw CommandError("unknown_preset", "no preset given");
  nlohmann::json doc;
  {
    fs::path path = options.preset;
    if (!fs::exists(path)) {
      const fs::path dir =
          options.preset_dir.empty() ? fs::path(default_preset_dir()) : fs::path(options.preset_dir);
      path = dir / (options.preset + ".json");
    }
    std::ifstream in(path);
    if (!in) throw CommandError("unknown_preset", "unknown preset: " + options.preset);
    in >> doc;
    if (!doc.contains("name")) doc["name"] = path.stem().string();
  }
  if (!options.config_override.empty()) {
    std::ifstream in(options.config_override);
    if (!in) throw CommandError("io_error", "cannot read override: " + options.config_override);
    nlohmann::json patch;
    in >> patch;
    doc.merge_patch(patch);
  }
  if (options.seed != 0) doc["seed"] = options.seed;
  if (options.episodes >= 0) doc["train"]["episodes"] = options.episodes;

  ResolvedScenario out;
  try {
    out.preset = preset_from_json(doc);
  } catch (const std::exception& e) {
    throw CommandError("bad_config", e.what());
  }
  out.document = doc;
  return out;
}

bool flat_penalty(const EnvConfig& cfg, int message) {
  const double first = cfg.penalty_fn(message, 0);
  for (int tau = 1; tau < cfg.buffer_len; ++tau)
    if (cfg.penalty_fn(message, tau) != first) return false;
  return true;
}

bool all_unit_durations(const EnvConfig& cfg) {
  for (int v : cfg.duration_table.data())
    if (v != 1) return false;
  return true;
}

void require_stopping_applicable(const EnvConfig& cfg) {
  if (cfg.n_messages != 1 || cfg.n_channels != 1 || !all_unit_durations(cfg) ||
      !flat_penalty(cfg, 0))
    throw CommandError("preset_not_applicable",
                       "the optimal-stopping baseline needs one message, one channel, unit "
                       "durations and a flat penalty");
}

void require_rvi_applicable(const EnvConfig& cfg) {
  if (cfg.n_messages != 2 || cfg.n_channels != 1 || !all_unit_durations(cfg) ||
      !flat_penalty(cfg, 0) || !flat_penalty(cfg, 1))
    throw CommandError("preset_not_applicable",
                       "the tabular baseline needs two messages, one channel, unit durations "
                       "and flat penalties");
}

baselines::RviOptions rvi_options_for(const EnvConfig& cfg) {
  baselines::RviOptions opts;
  opts.tradeoff_v = cfg.tradeoff_v;
  opts.energy_const = cfg.energy_const(0, 0);
  opts.gain_support = cfg.gain_support;
  opts.penalty = {cfg.penalty_fn(0, 0), cfg.penalty_fn(1, 0)};
  return opts;
}

std::vector<bound::LatencyRateCurve> build_curves(const EnvConfig& cfg,
                                                  const CommandOptions& options) {
  std::vector<bound::LatencyRateCurve> curves;
  curves.reserve(cfg.n_messages);
  for (int n = 0; n < cfg.n_messages; ++n) {
    const std::uint64_t seed =
        derive_stream_seed(cfg.seed, "bound/message-" + std::to_string(n + 1));
    if (flat_penalty(cfg, n)) {
      curves.push_back(bound::build_threshold_curve(cfg.arrival_rates[n], options.grid_step,
                                                    options.f_horizon, cfg.penalty_fn(n, 0),
                                                    seed));
    } else {
      // General penalties go through the DQN route on a coarser grid.
      const double step = std::max(options.grid_step, 0.1);
      bound::LatencyRateCurve curve;
      bound::DqnConfig dqn_cfg;
      dqn_cfg.seed = seed;
      for (double r = step; r < 1.0 + 1e-12; r += step) {
        const double rate = std::min(r, 1.0);
        const bound::DqnResult res =
            bound::latency_rate_dqn(cfg.arrival_rates[n], cfg.penalty_fn.row(n), rate, dqn_cfg);
        curve.rates.push_back(rate);
        curve.values.push_back(res.f_value);
        if (!res.reliable)
          std::cerr << "note: DQN rate " << fmt(rate) << " for message " << (n + 1)
                    << " achieved " << fmt(res.achieved_rate) << "; value flagged unreliable\n";
      }
      curve.validate();
      curves.push_back(std::move(curve));
    }
  }
  return curves;
}

struct TradeoffRow {
  double v;
  std::string algo;
  double latency;
  double energy;
  double reward;
  double se;
};

std::string tradeoff_csv(const std::vector<TradeoffRow>& rows) {
  std::string csv = "v,algorithm,avg_latency,avg_energy,avg_reward,reward_se\n";
  for (const TradeoffRow& r : rows) {
    csv += fmt(r.v) + "," + r.algo + "," + fmt(r.latency) + "," + fmt(r.energy) + "," +
           fmt(r.reward) + "," + fmt(r.se) + "\n";
  }
  return csv;
}

}  // namespace

int cmd_train(const CommandOptions& options) {
  ResolvedScenario scenario = resolve_scenario(options);
  TrainConfig tc = scenario.preset.train;
  tc.constrain_joint_action = options.algo != "mappo";
  fs::create_directories(options.out_dir);
  tc.checkpoint_dir = options.out_dir + "/checkpoints";

  const TrainResult result = train(tc);

  const std::string trace_path = options.out_dir + "/trace.csv";
  result.trace.save_csv(trace_path);

  RunManifest manifest =
      RunManifest::make("train", scenario.preset.name, tc.env.seed, scenario.document);
  manifest.outputs.push_back(trace_path);
  for (const PpoAgent& agent : result.agents)
    manifest.outputs.push_back(tc.checkpoint_dir + "/agent_" +
                               std::to_string(agent.channel() + 1) + ".json");
  manifest.save(options.out_dir + "/manifest.json");

  if (!result.trace.rows.empty()) {
    const MetricRow& last = result.trace.rows.back();
    std::cout << "trained " << scenario.preset.name << ": slots=" << last.slot
              << " avg_reward=" << fmt(last.avg_reward) << " win_reward=" << fmt(last.win_reward)
              << "\n";
  }
  return 0;
}

int cmd_tradeoff(const CommandOptions& options) {
  ResolvedScenario scenario = resolve_scenario(options);
  const EnvConfig& base_env = scenario.preset.train.env;
  std::vector<double> v_list = options.v_list;
  if (v_list.empty()) v_list = {0.0, 0.5, 1.0, 2.0, 5.0};

  std::vector<std::string> algos = options.algos;
  if (algos.empty()) {
    algos = {"de", "rr", "bound"};
    if (base_env.n_messages == 1 && base_env.n_channels == 1 && all_unit_durations(base_env) &&
        flat_penalty(base_env, 0))
      algos.push_back("stopping");
    if (base_env.n_messages == 2 && base_env.n_channels == 1 && all_unit_durations(base_env) &&
        flat_penalty(base_env, 0) && flat_penalty(base_env, 1))
      algos.push_back("rvi");
  }

  std::vector<TradeoffRow> rows;
  for (double v : v_list) {
    EnvConfig env_cfg = base_env;
    env_cfg.tradeoff_v = v;

    for (const std::string& algo : algos) {
      TradeoffRow row{v, algo, 0.0, 0.0, 0.0, 0.0};
      if (algo == "bound") {
        CommandOptions bound_opts = options;
        const std::vector<bound::LatencyRateCurve> curves = build_curves(env_cfg, bound_opts);
        const Grid<double> e = bound::min_energy_table(env_cfg.duration_table,
                                                       env_cfg.energy_const, env_cfg.max_gain());
        const bound::BoundResult res =
            bound::solve_p51(curves, e, env_cfg.duration_table, v, options.grid_step);
        row.latency = -res.latency_term;
        row.energy = res.energy;
        row.reward = res.value;
      } else if (algo == "de" || algo == "mappo") {
        TrainConfig tc = scenario.preset.train;
        tc.env = env_cfg;
        tc.constrain_joint_action = algo == "de";
        TrainResult trained = train(tc);
        Environment env(env_cfg);
        AgentPolicy policy(trained.agents, derive_stream_seed(env_cfg.seed, "tradeoff/eval"),
                           tc.constrain_joint_action);
        const EvalResult eval =
            evaluate_policy(policy, env, options.horizon, 1000, algo == "mappo");
        row.latency = eval.avg_latency;
        row.energy = eval.avg_energy;
        row.reward = eval.avg_reward;
        row.se = eval.reward_se;
      } else if (algo == "rr") {
        Environment env(env_cfg);
        baselines::RoundRobinPolicy policy(env_cfg.n_messages);
        const EvalResult eval = evaluate_policy(policy, env, options.horizon);
        row.latency = eval.avg_latency;
        row.energy = eval.avg_energy;
        row.reward = eval.avg_reward;
        row.se = eval.reward_se;
      } else if (algo == "stopping") {
        require_stopping_applicable(env_cfg);
        baselines::StoppingOptions sopt;
        sopt.seed = derive_stream_seed(env_cfg.seed, "tradeoff/stopping");
        const baselines::StoppingSolution sol = baselines::solve_optimal_stopping(
            env_cfg.arrival_rates[0], v, env_cfg.energy_const(0, 0), 1, env_cfg.gain_support,
            env_cfg.penalty_fn(0, 0), sopt);
        Environment env(env_cfg);
        baselines::ThresholdSchedulingPolicy policy(sol.policy);
        const EvalResult eval = evaluate_policy(policy, env, options.horizon);
        row.latency = eval.avg_latency;
        row.energy = eval.avg_energy;
        row.reward = eval.avg_reward;
        row.se = eval.reward_se;
      } else if (algo == "rvi") {
        require_rvi_applicable(env_cfg);
        baselines::RviOptions ropt = rvi_options_for(env_cfg);
        const int cap = scenario.preset.rvi_cap > 0 ? scenario.preset.rvi_cap : 10;
        const baselines::TabularPolicy table =
            baselines::rvi_solve(env_cfg.arrival_rates[0], env_cfg.arrival_rates[1], cap, ropt);
        Environment env(env_cfg);
        baselines::TabularSchedulingPolicy policy(table);
        const EvalResult eval = evaluate_policy(policy, env, options.horizon);
        row.latency = eval.avg_latency;
        row.energy = eval.avg_energy;
        row.reward = eval.avg_reward;
        row.se = eval.reward_se;
      } else {
        throw CommandError("unknown_algorithm", "unknown tradeoff algorithm: " + algo);
      }
      rows.push_back(row);
    }
  }

  fs::create_directories(options.out_dir);
  const std::string csv_path = options.out_dir + "/tradeoff.csv";
  write_file(csv_path, tradeoff_csv(rows));
  RunManifest manifest = RunManifest::make("tradeoff", scenario.preset.name,
                                           scenario.preset.train.env.seed, scenario.document);
  manifest.outputs.push_back(csv_path);
  manifest.save(options.out_dir + "/manifest.json");
  std::cout << "tradeoff rows: " << rows.size() << " -> " << csv_path << "\n";
  return 0;
}

int cmd_baseline(const CommandOptions& options) {
  ResolvedScenario scenario = resolve_scenario(options);
  const EnvConfig& env_cfg = scenario.preset.train.env;
  fs::create_directories(options.out_dir);
  RunManifest manifest = RunManifest::make("baseline", scenario.preset.name, env_cfg.seed,
                                           scenario.document);

  if (options.which == "rr") {
    Environment env(env_cfg);
    baselines::RoundRobinPolicy policy(env_cfg.n_messages);
    const EvalResult eval = evaluate_policy(policy, env, options.horizon);
    const std::string path = options.out_dir + "/rr.csv";
    write_file(path, "avg_reward,avg_energy,avg_latency,reward_se\n" + fmt(eval.avg_reward) +
                         "," + fmt(eval.avg_energy) + "," + fmt(eval.avg_latency) + "," +
                         fmt(eval.reward_se) + "\n");
    manifest.outputs.push_back(path);
  } else if (options.which == "stopping") {
    require_stopping_applicable(env_cfg);
    baselines::StoppingOptions sopt;
    sopt.seed = derive_stream_seed(env_cfg.seed, "baseline/stopping");
    const baselines::StoppingSolution sol = baselines::solve_optimal_stopping(
        env_cfg.arrival_rates[0], env_cfg.tradeoff_v, env_cfg.energy_const(0, 0), 1,
        env_cfg.gain_support, env_cfg.penalty_fn(0, 0), sopt);
    std::string csv = "threshold,value,se\n";
    for (const baselines::SweepPoint& p : sol.sweep)
      csv += std::to_string(p.threshold) + "," + fmt(p.value) + "," + fmt(p.se) + "\n";
    const std::string sweep_path = options.out_dir + "/stopping_sweep.csv";
    write_file(sweep_path, csv);
    const std::string sol_path = options.out_dir + "/stopping.csv";
    write_file(sol_path, "threshold,value,se\n" + std::to_string(sol.policy.threshold) + "," +
                             fmt(sol.value) + "," + fmt(sol.se) + "\n");
    manifest.outputs.push_back(sweep_path);
    manifest.outputs.push_back(sol_path);
  } else if (options.which == "rvi") {
    require_rvi_applicable(env_cfg);
    const int cap = scenario.preset.rvi_cap > 0 ? scenario.preset.rvi_cap : 10;
    const baselines::TabularPolicy table = baselines::rvi_solve(
        env_cfg.arrival_rates[0], env_cfg.arrival_rates[1], cap, rvi_options_for(env_cfg));
    std::string policy_csv = "count_1,count_2,action\n";
    for (int i = 0; i <= cap; ++i)
      for (int j = 0; j <= cap; ++j)
        policy_csv += std::to_string(i) + "," + std::to_string(j) + "," +
                      std::to_string(table.table(i, j)) + "\n";
    const std::string policy_path = options.out_dir + "/rvi_policy.csv";
    write_file(policy_path, policy_csv);

    std::string curve_csv = "count_1,count_2\n";
    for (const auto& [i, j] : baselines::extract_switch_curve(table))
      curve_csv += std::to_string(i) + "," + std::to_string(j) + "\n";
    const std::string curve_path = options.out_dir + "/rvi_switch_curve.csv";
    write_file(curve_path, curve_csv);

    const std::string gain_path = options.out_dir + "/rvi_gain.csv";
    write_file(gain_path, "cap,gain\n" + std::to_string(cap) + "," + fmt(table.gain) + "\n");
    manifest.outputs.push_back(policy_path);
    manifest.outputs.push_back(curve_path);
    manifest.outputs.push_back(gain_path);
  } else if (options.which == "mappo") {
    TrainConfig tc = scenario.preset.train;
    tc.constrain_joint_action = false;
    TrainResult trained = train(tc);
    Environment env(env_cfg);
    AgentPolicy policy(trained.agents, derive_stream_seed(env_cfg.seed, "baseline/mappo"), false);
    const EvalResult eval = evaluate_policy(policy, env, options.horizon, 1000, true);
    const std::string path = options.out_dir + "/mappo.csv";
    write_file(path, "avg_reward,avg_energy,avg_latency,reward_se\n" + fmt(eval.avg_reward) +
                         "," + fmt(eval.avg_energy) + "," + fmt(eval.avg_latency) + "," +
                         fmt(eval.reward_se) + "\n");
    manifest.outputs.push_back(path);
  } else {
    throw CommandError("unknown_baseline", "unknown baseline: " + options.which);
  }

  manifest.save(options.out_dir + "/manifest.json");
  std::cout << "baseline " << options.which << " -> " << options.out_dir << "\n";
  return 0;
}

int cmd_bound(const CommandOptions& options) {
  ResolvedScenario scenario = resolve_scenario(options);
  EnvConfig env_cfg = scenario.preset.train.env;
  if (!std::isnan(options.v_override)) env_cfg.tradeoff_v = options.v_override;

  const std::vector<bound::LatencyRateCurve> curves = build_curves(env_cfg, options);
  const Grid<double> e =
      bound::min_energy_table(env_cfg.duration_table, env_cfg.energy_const, env_cfg.max_gain());
  const bound::BoundResult res =
      bound::solve_p51(curves, e, env_cfg.duration_table, env_cfg.tradeoff_v, options.grid_step);

  fs::create_directories(options.out_dir);
  RunManifest manifest =
      RunManifest::make("bound", scenario.preset.name, env_cfg.seed, scenario.document);

  const std::string bound_path = options.out_dir + "/bound.csv";
  write_file(bound_path, "v,bound,latency_term,energy\n" + fmt(env_cfg.tradeoff_v) + "," +
                             fmt(res.value) + "," + fmt(res.latency_term) + "," +
                             fmt(res.energy) + "\n");
  manifest.outputs.push_back(bound_path);

  for (int n = 0; n < env_cfg.n_messages; ++n) {
    std::string csv = "rate,f\n";
    for (std::size_t i = 0; i < curves[n].rates.size(); ++i)
      csv += fmt(curves[n].rates[i]) + "," + fmt(curves[n].values[i]) + "\n";
    const std::string path =
        options.out_dir + "/latency_rate_" + std::to_string(n + 1) + ".csv";
    write_file(path, csv);
    manifest.outputs.push_back(path);
  }

  std::string rates_csv = "message,channel,rate\n";
  for (int n = 0; n < env_cfg.n_messages; ++n)
    for (int m = 0; m < env_cfg.n_channels; ++m)
      rates_csv += std::to_string(n + 1) + "," + std::to_string(m + 1) + "," +
                   fmt(res.rate_matrix.rates(n, m)) + "\n";
  const std::string rates_path = options.out_dir + "/bound_rates.csv";
  write_file(rates_path, rates_csv);
  manifest.outputs.push_back(rates_path);

  manifest.save(options.out_dir + "/manifest.json");
  std::cout << "bound(" << scenario.preset.name << ", V=" << fmt(env_cfg.tradeoff_v)
            << ") = " << fmt(res.value) << "\n";
  return 0;
}

int cmd_verify(const CommandOptions& options) {
  ResolvedScenario scenario = resolve_scenario(options);
  const EnvConfig& env_cfg = scenario.preset.train.env;
  int failures = 0;
  const auto report = [&failures](const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << name;
    if (!detail.empty()) std::cout << " (" << detail << ")";
    std::cout << "\n";
    if (!ok) ++failures;
  };

  // Feasibility, reward identity and throughput accounting over a run with
  // untrained agents.
  {
    TrainConfig tc = scenario.preset.train;
    tc.episodes = 0;
    TrainResult agents = train(tc);
    Environment env(env_cfg);
    RngStream order_rng(env_cfg.seed, "verify/order");
    RngStream sample_rng(env_cfg.seed, "verify/sample");
    const long slots = 10000;
    long violations = 0;
    double worst_identity = 0.0;
    std::vector<JointAction> trajectory;
    trajectory.reserve(slots);
    for (long t = 0; t < slots; ++t) {
      std::vector<CategoricalPolicy> policies(env_cfg.n_channels);
      for (int m = 0; m < env_cfg.n_channels; ++m)
        policies[m] = agents.agents[m].act_distribution(env.observe(m));
      const ResolvedAction resolved = de::resolve(policies, order_rng, sample_rng);
      if (!env.feasible(resolved.joint)) ++violations;
      const StepOutcome out = env.step(resolved.joint);
      worst_identity = std::max(
          worst_identity,
          std::abs(out.reward + env_cfg.tradeoff_v * out.energy + out.latency_penalty));
      trajectory.push_back(resolved.joint);
    }
    report("constraint feasibility over 10k slots", violations == 0,
           std::to_string(violations) + " violations");
    report("reward decomposition identity", worst_identity < 1e-9,
           "max deviation " + fmt(worst_identity));
    const bound::CapacityReport cap = bound::check_capacity(trajectory, env_cfg.duration_table);
    report("throughput capacity on the emitted trajectory", cap.ok, "");
  }

  // Arrival calibration.
  {
    bool ok = true;
    std::string detail;
    for (int n = 0; n < env_cfg.n_messages; ++n) {
      RngStream rng(env_cfg.seed, "verify/poisson-" + std::to_string(n));
      const long samples = 100000;
      double sum = 0.0;
      for (long i = 0; i < samples; ++i) sum += rng.poisson(env_cfg.arrival_rates[n]);
      const double mean = sum / samples;
      const double se = std::sqrt(env_cfg.arrival_rates[n] / samples);
      if (std::abs(mean - env_cfg.arrival_rates[n]) > 3.0 * se) {
        ok = false;
        detail = "message " + std::to_string(n + 1) + " mean " + fmt(mean);
      }
    }
    report("arrival sampler calibration (3 standard errors)", ok, detail);
  }

  // Resolver law on a small uniform case.
  {
    const int m_agents = std::min(env_cfg.n_channels, 2);
    const int n_actions = std::min(env_cfg.n_messages, 2) + 1;
    std::vector<CategoricalPolicy> policies(
        m_agents, CategoricalPolicy{std::vector<double>(n_actions, 1.0 / n_actions)});
    RngStream order_rng(env_cfg.seed, "verify/de-order");
    RngStream sample_rng(env_cfg.seed, "verify/de-sample");
    long bad = 0;
    const long draws = 20000;
    for (long i = 0; i < draws; ++i) {
      const ResolvedAction r = de::resolve(policies, order_rng, sample_rng);
      for (int a = 0; a < m_agents; ++a)
        for (int b = a + 1; b < m_agents; ++b)
          if (r.joint.choices[a] != 0 && r.joint.choices[a] == r.joint.choices[b]) ++bad;
      for (double p : r.stored_probs)
        if (!(p > 0.0)) ++bad;
    }
    report("resolver never duplicates a message start", bad == 0, "");
  }

  return failures == 0 ? 0 : 1;
}

}  // namespace mcsched
