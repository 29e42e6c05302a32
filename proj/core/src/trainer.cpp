#include "mcsched/trainer.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <thread>

#include "mcsched/baselines.hpp"
#include "mcsched/de.hpp"

namespace mcsched {

void TrainConfig::validate() const {
  env.validate();
  hyper.validate();
  if (episodes < 0) throw std::invalid_argument("TrainConfig: episodes must be >= 0");
  if (eval_interval < 0) throw std::invalid_argument("TrainConfig: eval_interval must be >= 0");
  for (int h : actor_hidden)
    if (h < 1) throw std::invalid_argument("TrainConfig: bad actor layer size");
  for (int h : critic_hidden)
    if (h < 1) throw std::invalid_argument("TrainConfig: bad critic layer size");
}

namespace {

void update_agents(std::vector<PpoAgent>& agents, const PpoHyper& hyper) {
  if (agents.size() == 1) {
    agents[0].update(hyper);
    return;
  }
  std::vector<std::thread> workers;
  workers.reserve(agents.size());
  for (PpoAgent& agent : agents)
    workers.emplace_back([&agent, &hyper] { agent.update(hyper); });
  for (std::thread& t : workers) t.join();
}

void write_checkpoints(const std::vector<PpoAgent>& agents, const std::string& dir) {
  std::filesystem::create_directories(dir);
  for (const PpoAgent& agent : agents) {
    const std::string path = dir + "/agent_" + std::to_string(agent.channel() + 1) + ".json";
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write checkpoint: " + path);
    f << agent.save_checkpoint().dump(2) << "\n";
  }
}

}  // namespace

TrainResult train(const TrainConfig& config) {
  config.validate();
  const EnvConfig& envc = config.env;
  const int m_channels = envc.n_channels;
  const int interval = config.eval_interval > 0 ? config.eval_interval : config.hyper.n_buffer;

  TrainResult result;
  result.trace.n_messages = envc.n_messages;
  result.trace.n_channels = m_channels;

  RngStream init_rng(envc.seed, "trainer/net-init");
  RngStream order_rng(envc.seed, "de/order");
  RngStream sample_rng(envc.seed, "de/sample");

  result.agents.reserve(m_channels);
  for (int m = 0; m < m_channels; ++m)
    result.agents.emplace_back(m, envc, config.actor_hidden, config.critic_hidden,
                               config.activation, init_rng);
  if (config.episodes == 0) return result;

  Environment env(envc);
  MetricAccumulator acc(envc.n_messages, m_channels, config.hyper.n_buffer);
  const ObservationEncoder& encoder = result.agents[0].encoder();

  // throughput accounting: committed slots may exceed the elapsed slots only
  // by the overhang of the one in-flight multicast
  std::vector<long> load_credit(m_channels, 0);
  for (int m = 0; m < m_channels; ++m) {
    int longest = 1;
    for (int n = 0; n < envc.n_messages; ++n)
      longest = std::max(longest, envc.duration_table(n, m));
    load_credit[m] = longest - 1;
  }

  long global_slot = 0;
  for (int episode = 1; episode <= config.episodes; ++episode) {
    env.reset();
    std::vector<long> channel_load(m_channels, 0);

    for (int t = 0; t < config.hyper.n_buffer; ++t) {
      const EnvState& state = env.state();
      const std::vector<double> global_enc = encoder.encode_global(state);

      std::vector<AgentObservation> observations(m_channels);
      std::vector<CategoricalPolicy> policies(m_channels);
      std::vector<std::vector<double>> obs_enc(m_channels);
      for (int m = 0; m < m_channels; ++m) {
        observations[m] = env.observe(m);
        policies[m] = result.agents[m].act_distribution(observations[m]);
        obs_enc[m] = encoder.encode_observation(observations[m]);
      }

      ResolvedAction resolved;
      if (config.constrain_joint_action) {
        resolved = de::resolve(policies, order_rng, sample_rng);
      } else {
        resolved = baselines::unconstrained_sample(policies, sample_rng);
      }

      const StepOutcome outcome = config.constrain_joint_action
                                      ? env.step(resolved.joint)
                                      : env.step_allow_duplicate_starts(resolved.joint);

      for (int m = 0; m < m_channels; ++m) {
        ExperienceRecord rec;
        rec.global_state = global_enc;
        rec.agent_obs = obs_enc[m];
        rec.agent_action = resolved.joint.choices[m];
        rec.reward = outcome.reward;
        rec.stored_prob = resolved.stored_probs[m];
        rec.forced = observations[m].own_avail > 0;
        result.agents[m].store(rec, config.hyper.n_buffer);
      }

      for (int m = 0; m < m_channels; ++m) {
        const int choice = resolved.joint.choices[m];
        if (choice > 0) channel_load[m] += envc.duration_table(choice - 1, m);
        if (channel_load[m] > t + 1 + load_credit[m])
          throw std::logic_error("train: channel throughput accounting exceeded the slot count");
      }

      ++global_slot;
      acc.record(outcome.reward, outcome.energy, outcome.latency_penalty,
                 resolved.joint.choices);
      if (global_slot % interval == 0) result.trace.rows.push_back(acc.snapshot());
    }

    update_agents(result.agents, config.hyper);

    if (config.checkpoint_every > 0 && !config.checkpoint_dir.empty() &&
        episode % config.checkpoint_every == 0)
      write_checkpoints(result.agents, config.checkpoint_dir);
  }

  if (!config.checkpoint_dir.empty()) write_checkpoints(result.agents, config.checkpoint_dir);
  return result;
}

MetricTrace apply_online(std::vector<PpoAgent>& agents, Environment& env, long horizon,
                         std::uint64_t seed, bool constrain_joint_action, int snapshot_interval,
                         long warmup) {
  MetricTrace trace;
  trace.n_messages = env.config().n_messages;
  trace.n_channels = env.config().n_channels;
  if (horizon <= 0) return trace;

  RngStream order_rng(seed, "de/order");
  RngStream sample_rng(seed, "de/sample");
  MetricAccumulator acc(trace.n_messages, trace.n_channels, warmup);

  const int m_channels = env.config().n_channels;
  for (long slot = 1; slot <= horizon; ++slot) {
    std::vector<CategoricalPolicy> policies(m_channels);
    for (int m = 0; m < m_channels; ++m)
      policies[m] = agents[m].act_distribution(env.observe(m));
    const ResolvedAction resolved =
        constrain_joint_action ? de::resolve(policies, order_rng, sample_rng)
                               : baselines::unconstrained_sample(policies, sample_rng);
    const StepOutcome outcome = constrain_joint_action
                                    ? env.step(resolved.joint)
                                    : env.step_allow_duplicate_starts(resolved.joint);
    acc.record(outcome.reward, outcome.energy, outcome.latency_penalty, resolved.joint.choices);
    if (slot % snapshot_interval == 0) trace.rows.push_back(acc.snapshot());
  }
  if (horizon % snapshot_interval != 0) trace.rows.push_back(acc.snapshot());
  return trace;
}

AgentPolicy::AgentPolicy(std::vector<PpoAgent>& agents, std::uint64_t seed, bool constrain)
    : agents_(&agents),
      order_rng_(seed, "de/order"),
      sample_rng_(seed, "de/sample"),
      constrain_(constrain) {}

JointAction AgentPolicy::decide(const EnvState& state) {
  const int m_channels = static_cast<int>(state.channel_avail.size());
  std::vector<CategoricalPolicy> policies(m_channels);
  for (int m = 0; m < m_channels; ++m)
    policies[m] = (*agents_)[m].act_distribution(observe(state, m));
  if (constrain_) return de::resolve(policies, order_rng_, sample_rng_).joint;
  return baselines::unconstrained_sample(policies, sample_rng_).joint;
}

EvalResult evaluate_policy(SchedulingPolicy& policy, Environment& env, long horizon, long warmup,
                           bool allow_duplicate_starts) {
  MetricAccumulator acc(env.config().n_messages, env.config().n_channels, warmup);
  for (long slot = 0; slot < horizon; ++slot) {
    const JointAction action = policy.decide(env.state());
    const StepOutcome outcome =
        allow_duplicate_starts ? env.step_allow_duplicate_starts(action) : env.step(action);
    acc.record(outcome.reward, outcome.energy, outcome.latency_penalty, action.choices);
  }
  EvalResult res;
  res.avg_reward = acc.avg_reward();
  res.avg_energy = acc.avg_energy();
  res.avg_latency = acc.avg_latency();
  res.reward_se = acc.reward_standard_error();
  res.rates = acc.snapshot().rates;
  return res;
}

}  // namespace mcsched
