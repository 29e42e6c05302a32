#pragma once

#include <cstdint>
#include <vector>

#include <json.hpp>

#include "mcsched/de.hpp"
#include "mcsched/env.hpp"
#include "mcsched/nn.hpp"

namespace mcsched {

struct PpoHyper {
  int n_buffer = 1000;            // experience buffer capacity
  int n_updates = 10;             // gradient iterations per update phase
  double discount = 0.9;          // return discount
  double clip = 0.2;              // ratio clip half-width
  double value_coeff = 0.5;       // c1
  double entropy_coeff = 0.01;    // c2
  double learning_rate = 1e-3;
  bool normalize_advantage = true;  // mean/std-normalize advantages per update

  void validate() const;
};

// One buffered interaction: (global state, agent observation, agent action,
// reward, probability the actor assigned to the action when it was taken).
// Both state vectors are stored pre-encoded.
struct ExperienceRecord {
  std::vector<double> global_state;
  std::vector<double> agent_obs;
  int agent_action = 0;
  double reward = 0.0;
  double stored_prob = 1.0;
  bool forced = false;  // channel was busy, so the action was the forced idle
};

// Fixed per-feature scaling of raw states into network inputs.
class ObservationEncoder {
 public:
  ObservationEncoder() = default;
  explicit ObservationEncoder(const EnvConfig& cfg);

  std::vector<double> encode_observation(const AgentObservation& obs) const;
  std::vector<double> encode_global(const EnvState& state) const;

  int observation_dim() const { return observation_dim_; }
  int global_dim() const { return global_dim_; }

 private:
  int observation_dim_ = 0;
  int global_dim_ = 0;
  std::vector<double> q_scale_;  // per message
  double c_scale_ = 1.0;
  double g_scale_ = 1.0;
  double clip_at_ = 5.0;
};

// Discounted forward sums truncated at the buffer end, no bootstrap.
std::vector<double> compute_returns(const std::vector<double>& rewards, double discount);

inline double compute_advantage(double return_value, double critic_value) {
  return return_value - critic_value;
}

struct SurrogateTerms {
  double loss = 0.0;
  GradientSet actor_grads;
  GradientSet critic_grads;
};

// One modified PPO agent: masked actor over its own channel, critic over the
// global state, and an experience buffer.
class PpoAgent {
 public:
  PpoAgent() = default;
  PpoAgent(int channel, const EnvConfig& env_cfg, const std::vector<int>& actor_hidden,
           const std::vector<int>& critic_hidden, Activation activation, RngStream& init_rng);

  // Actor distribution with the busy-channel mask applied: a busy channel
  // gets the idle action with probability 1.
  CategoricalPolicy act_distribution(const AgentObservation& obs) const;

  // Probability ratio for one buffered record against the current actor;
  // pinned to 1 for records whose action was forced by the mask.
  double compute_ratio(const ExperienceRecord& record) const;

  // Clipped-surrogate loss plus value error and entropy bonus, averaged over
  // the batch, with exact gradients for both networks. Advantages are
  // treated as constants.
  SurrogateTerms surrogate_loss(const std::vector<ExperienceRecord>& batch,
                                const std::vector<double>& returns,
                                const std::vector<double>& advantages,
                                const PpoHyper& hyper) const;

  void store(const ExperienceRecord& record, int capacity);

  // Full update phase: compute returns and advantages once (critic snapshot),
  // run n_updates gradient iterations, empty the buffer.
  void update(const PpoHyper& hyper);

  const std::vector<ExperienceRecord>& buffer() const { return buffer_; }
  std::vector<ExperienceRecord>& buffer() { return buffer_; }
  const DenseNet& actor() const { return actor_; }
  const DenseNet& critic() const { return critic_; }
  DenseNet& actor() { return actor_; }
  DenseNet& critic() { return critic_; }
  const ObservationEncoder& encoder() const { return encoder_; }
  int channel() const { return channel_; }
  int n_actions() const { return actor_.output_size(); }

  nlohmann::json save_checkpoint() const;
  static PpoAgent load_checkpoint(const nlohmann::json& doc, const EnvConfig& env_cfg);

 private:
  int channel_ = 0;
  DenseNet actor_;
  DenseNet critic_;
  ObservationEncoder encoder_;
  std::vector<ExperienceRecord> buffer_;
};

}  // namespace mcsched
