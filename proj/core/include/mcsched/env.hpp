#pragma once

#include <cstdint>
#include <vector>

#include "mcsched/grid.hpp"
#include "mcsched/rng.hpp"

namespace mcsched {

// Scenario parameters of the multicast scheduling MDP.
struct EnvConfig {
  int n_messages = 1;                 // N
  int n_channels = 1;                 // M
  int buffer_len = 4;                 // request buffer depth per message
  std::vector<double> arrival_rates;  // per-message Poisson rates, size N
  Grid<int> duration_table;           // multicast durations in slots, N x M
  Grid<double> energy_const;          // per-transmission energy constants, N x M
  double tradeoff_v = 1.0;            // weight on energy vs latency penalty
  Grid<double> penalty_fn;            // per-slot penalty of a request aged tau, N x buffer_len
  std::vector<double> gain_support;   // finite support of per-request channel gains
  std::uint64_t seed = 0;

  double max_gain() const;  // largest supported gain
  void validate() const;    // throws std::invalid_argument on a bad config
};

// Full MDP state.
struct EnvState {
  Grid<int> request_matrix;         // buffered request counts by message x age
  std::vector<int> channel_avail;   // remaining busy slots per channel
  Grid<double> channel_status;      // worst buffered gain per message x channel
  long clock = 1;

  std::vector<double> flatten() const;  // row-major Q, then avail, then status
};

// One scheduling decision: per-channel message choice, 0 = idle.
struct JointAction {
  std::vector<int> choices;
};

// The per-channel projection of the state seen by one agent.
struct AgentObservation {
  Grid<int> request_matrix;
  int own_avail = 0;
  std::vector<double> own_gains;

  std::vector<double> flatten() const;  // row-major Q, own_avail, own_gains
};

struct StepOutcome {
  EnvState next;
  double reward = 0.0;
  double energy = 0.0;           // energy consumption charged this slot
  double latency_penalty = 0.0;  // instant latency penalty this slot
};

// --- pure pieces of the transition ---------------------------------------

// Advances one message's request vector by one slot. multicast=true resets
// the buffer to the new arrivals; otherwise ages shift right with the last
// two entries accumulated.
std::vector<int> shift_request_vector(const std::vector<int>& q_vec, int new_count,
                                      bool multicast);

// Advances one (message, channel) worst-gain entry. With no new requests a
// multicast resets the entry to max_gain; otherwise the rolling minimum
// continues.
double update_channel_status(double g_old, const std::vector<double>& new_request_gains,
                             bool multicast, double max_gain);

double instant_latency_penalty(const Grid<int>& request_matrix, const Grid<double>& penalty_fn);

// True iff busy channels all idle and no message is started on two channels
// at once.
bool feasible(const EnvState& state, const JointAction& action);

// Per-channel projection of the state (requests, own availability, own gain
// column). Throws std::out_of_range on a bad channel index.
AgentObservation observe(const EnvState& state, int channel);

// Deterministic transition given the sampled arrivals and per-request gains.
// request_gains[n] has one row per new request of message n, one column per
// channel.
EnvState transition(const EnvConfig& cfg, const EnvState& state, const JointAction& action,
                    const std::vector<int>& arrivals,
                    const std::vector<Grid<double>>& request_gains);

EnvState init_state(const EnvConfig& cfg);

// --- stateful wrapper ------------------------------------------------------

class Environment {
 public:
  explicit Environment(EnvConfig cfg);

  const EnvConfig& config() const { return cfg_; }
  const EnvState& state() const { return state_; }
  void reset();

  bool feasible(const JointAction& action) const;
  AgentObservation observe(int channel) const;

  // Samples arrivals and gains, checks feasibility, applies the transition.
  // Throws std::invalid_argument naming the violated constraint.
  StepOutcome step(const JointAction& action);

  // Ablation entry: several channels may start the same message in one slot
  // (each paying its own energy); busy channels must still idle.
  StepOutcome step_allow_duplicate_starts(const JointAction& action);

 private:
  StepOutcome step_impl(const JointAction& action, bool allow_duplicates);

  EnvConfig cfg_;
  EnvState state_;
  RngStream arrivals_rng_;
  RngStream gains_rng_;
};

}  // namespace mcsched
