#include <benchmark/benchmark.h>

#include "mcsched/baselines.hpp"
#include "mcsched/bound.hpp"
#include "mcsched/de.hpp"
#include "mcsched/env.hpp"
#include "mcsched/ppo.hpp"

using namespace mcsched;

namespace {

EnvConfig bench_config(int n, int m) {
  EnvConfig cfg;
  cfg.n_messages = n;
  cfg.n_channels = m;
  cfg.buffer_len = 4;
  cfg.arrival_rates.assign(n, 12.0);
  cfg.duration_table = Grid<int>(n, m, 1);
  cfg.energy_const = Grid<double>(n, m, 500.0);
  cfg.tradeoff_v = 1.0;
  cfg.penalty_fn = Grid<double>(n, 4, 1.0);
  cfg.gain_support = {100, 101, 102, 103, 104, 105, 106, 107, 108, 109, 110};
  cfg.seed = 1;
  return cfg;
}

void bm_env_step(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Environment env(bench_config(n, n));
  RngStream rng(2);
  for (auto _ : state) {
    JointAction a;
    a.choices.assign(n, 0);
    std::vector<bool> used(n + 1, false);
    for (int m = 0; m < n; ++m) {
      if (env.state().channel_avail[m] > 0) continue;
      const int pick = static_cast<int>(rng.uniform_index(n + 1));
      if (pick > 0 && !used[pick]) {
        a.choices[m] = pick;
        used[pick] = true;
      }
    }
    benchmark::DoNotOptimize(env.step(a));
  }
}
BENCHMARK(bm_env_step)->Arg(2)->Arg(10);

void bm_de_resolve(benchmark::State& state) {
  const int m = static_cast<int>(state.range(0));
  const int n_actions = m + 1;
  RngStream order_rng(3), sample_rng(4);
  std::vector<CategoricalPolicy> policies(
      m, CategoricalPolicy{std::vector<double>(n_actions, 1.0 / n_actions)});
  for (auto _ : state) benchmark::DoNotOptimize(de::resolve(policies, order_rng, sample_rng));
}
BENCHMARK(bm_de_resolve)->Arg(2)->Arg(10);

void bm_actor_forward(benchmark::State& state) {
  const int width = static_cast<int>(state.range(0));
  DenseNet net({51, width, width, width, 11}, Activation::kTanh, OutputHead::kSoftmax);
  RngStream rng(5);
  net.init_params(rng);
  std::vector<double> input(51, 0.3);
  for (auto _ : state) benchmark::DoNotOptimize(net.forward(input));
}
BENCHMARK(bm_actor_forward)->Arg(16)->Arg(128);

void bm_surrogate_update(benchmark::State& state) {
  const EnvConfig cfg = bench_config(2, 1);
  RngStream init(7), rng(8);
  PpoHyper hyper;
  hyper.n_buffer = 256;
  hyper.n_updates = 1;
  for (auto _ : state) {
    state.PauseTiming();
    PpoAgent agent(0, cfg, {32, 32}, {32, 32}, Activation::kTanh, init);
    Environment env(cfg);
    for (int i = 0; i < hyper.n_buffer; ++i) {
      const AgentObservation obs = env.observe(0);
      const CategoricalPolicy policy = agent.act_distribution(obs);
      const int action = policy.sample(rng);
      const StepOutcome outcome = env.step(JointAction{{action}});
      ExperienceRecord rec;
      rec.global_state = agent.encoder().encode_global(env.state());
      rec.agent_obs = agent.encoder().encode_observation(obs);
      rec.agent_action = action;
      rec.reward = outcome.reward;
      rec.stored_prob = policy.probs[action];
      rec.forced = obs.own_avail > 0;
      agent.store(rec, hyper.n_buffer);
    }
    state.ResumeTiming();
    agent.update(hyper);
  }
}
BENCHMARK(bm_surrogate_update)->Unit(benchmark::kMillisecond);

void bm_rvi_solve(benchmark::State& state) {
  const int cap = static_cast<int>(state.range(0));
  baselines::RviOptions opt;
  for (auto _ : state) benchmark::DoNotOptimize(baselines::rvi_solve(2.0, 3.0, cap, opt));
}
BENCHMARK(bm_rvi_solve)->Arg(10)->Arg(15)->Unit(benchmark::kMillisecond);

void bm_threshold_curve_exact(benchmark::State& state) {
  for (auto _ : state)
    benchmark::DoNotOptimize(bound::build_threshold_curve(12.0, 0.02, 0));
}
BENCHMARK(bm_threshold_curve_exact)->Unit(benchmark::kMillisecond);

void bm_solve_p51(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  std::vector<bound::LatencyRateCurve> curves;
  for (int i = 0; i < n; ++i)
    curves.push_back(bound::build_threshold_curve(10.0 + i, 0.02, 0, 1.0, 50 + i));
  const Grid<int> durations(n, n, 1);
  const Grid<double> e = bound::min_energy_table(durations, Grid<double>(n, n, 500.0), 110.0);
  for (auto _ : state)
    benchmark::DoNotOptimize(bound::solve_p51(curves, e, durations, 1.0, 0.02));
}
BENCHMARK(bm_solve_p51)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
