#pragma once

#include <memory>
#include <vector>

#include "mcsched/env.hpp"
#include "mcsched/metrics.hpp"
#include "mcsched/ppo.hpp"

namespace mcsched {

struct TrainConfig {
  EnvConfig env;
  PpoHyper hyper;
  int episodes = 1;                    // experience-generation/update rounds
  int eval_interval = 0;               // slots between snapshots; 0 = every buffer
  std::vector<int> actor_hidden{16, 16};
  std::vector<int> critic_hidden{16, 16};
  Activation activation = Activation::kTanh;
  bool constrain_joint_action = true;  // false: independent sampling ablation
  int checkpoint_every = 0;            // episodes between checkpoints; 0 = off
  std::string checkpoint_dir;

  void validate() const;
};

struct TrainResult {
  std::vector<PpoAgent> agents;
  MetricTrace trace;
};

// Offline training: alternate buffer-filling and update phases, resetting
// the environment at each episode start.
TrainResult train(const TrainConfig& config);

// Runs trained agents without storing experience or updating, accumulating
// metrics over the horizon.
MetricTrace apply_online(std::vector<PpoAgent>& agents, Environment& env, long horizon,
                         std::uint64_t seed, bool constrain_joint_action = true,
                         int snapshot_interval = 1000, long warmup = 1000);

// Any state -> joint action map that can be evaluated on the environment.
class SchedulingPolicy {
 public:
  virtual ~SchedulingPolicy() = default;
  virtual JointAction decide(const EnvState& state) = 0;
};

// Samples from the agents' masked actors through the joint-action resolver.
class AgentPolicy : public SchedulingPolicy {
 public:
  AgentPolicy(std::vector<PpoAgent>& agents, std::uint64_t seed, bool constrain = true);
  JointAction decide(const EnvState& state) override;

 private:
  std::vector<PpoAgent>* agents_;
  RngStream order_rng_, sample_rng_;
  bool constrain_;
};

struct EvalResult {
  double avg_reward = 0.0;
  double avg_energy = 0.0;
  double avg_latency = 0.0;
  double reward_se = 0.0;            // batch-means standard error
  std::vector<double> rates;         // starts per slot, message x channel
};

// Long-run averages of a policy over `horizon` slots (first `warmup` slots
// excluded). Throws if the policy emits an infeasible action, unless
// allow_duplicate_starts permits same-slot duplicate message starts (used
// for the unconstrained-sampling ablation only).
EvalResult evaluate_policy(SchedulingPolicy& policy, Environment& env, long horizon,
                           long warmup = 1000, bool allow_duplicate_starts = false);

}  // namespace mcsched
