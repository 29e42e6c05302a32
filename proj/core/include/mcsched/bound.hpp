#pragma once

#include <cstdint>
#include <vector>

#include "mcsched/env.hpp"
#include "mcsched/grid.hpp"
#include "mcsched/nn.hpp"

namespace mcsched {
namespace bound {

// --- throughput capacity -----------------------------------------------------

struct CapacityReport {
  bool ok = true;
  std::vector<double> loads;  // final per-channel busy fraction
};

// Checks that on every prefix of the trajectory each channel's committed
// multicast slots never exceed the elapsed slots.
CapacityReport check_capacity(const std::vector<JointAction>& trajectory,
                              const Grid<int>& duration_table);

// --- latency-rate functions --------------------------------------------------

// Renewal statistics of a threshold rule on the aggregate-count chain:
// expected slots per cycle and expected accumulated penalty per cycle.
// threshold -1 multicasts every slot.
struct CycleStats {
  double mean_length = 0.0;
  double mean_penalty = 0.0;
};

// Exact evaluation by dynamic programming over the count chain (flat
// per-request penalty).
CycleStats threshold_cycle_stats_exact(double lambda, int threshold, double penalty = 1.0);

// Monte Carlo evaluation over `slots` simulated slots, seeded.
CycleStats threshold_cycle_stats_mc(double lambda, int threshold, long slots,
                                    std::uint64_t seed, double penalty = 1.0);

// Best negative latency penalty per slot achievable at the target multicast
// rate, by mixing threshold rules on the upper concave envelope of their
// (cycle length, -penalty) points. horizon > 0 scores thresholds by Monte
// Carlo over that many slots; horizon == 0 uses the exact evaluator.
double latency_rate_threshold(double lambda, double target_rate, long horizon,
                              double penalty = 1.0, std::uint64_t seed = 1);

// Sampled latency-rate curve of one message, piecewise-linear between
// samples.
struct LatencyRateCurve {
  std::vector<double> rates;   // ascending, in (0, 1]
  std::vector<double> values;  // f at each rate

  double value_at(double rate) const;  // linear interpolation
  double max_rate() const { return rates.empty() ? 0.0 : rates.back(); }
  void validate() const;
};

// Samples the threshold-rule curve on a rate grid plus the exact mixing
// knots (the pure-threshold rates).
LatencyRateCurve build_threshold_curve(double lambda, double grid_step, long horizon,
                                       double penalty = 1.0, std::uint64_t seed = 1);

// --- vanilla DQN route for general penalties ----------------------------------

struct DqnConfig {
  std::vector<int> hidden{32, 32};
  Activation activation = Activation::kTanh;
  int replay_capacity = 10000;
  int min_replay = 1000;
  int batch_size = 64;
  int target_sync = 500;
  double eps_start = 1.0;
  double eps_end = 0.05;
  long eps_decay_steps = 20000;
  double learning_rate = 1e-3;
  double discount = 0.95;
  long train_steps = 60000;
  long eval_slots = 200000;
  long eval_warmup = 1000;
  double rate_penalty_weight = 0.5;  // scale of the quadratic rate-residual term
  double z_clip = 8.0;               // budget-residual bound, in per-multicast units
  std::uint64_t seed = 1;
};

struct DqnResult {
  double f_value = 0.0;       // long-run average of the negative penalty
  double achieved_rate = 0.0;
  bool reliable = true;       // achieved rate within 10% of the target
};

struct DqnTransition {
  std::vector<double> state;
  int action = 0;
  double reward = 0.0;
  std::vector<double> next_state;
};

struct DqnLossTerms {
  double loss = 0.0;
  GradientSet grads;
};

// Mean squared TD error of the online net against the frozen target net.
DqnLossTerms dqn_loss(const DenseNet& online, const DenseNet& target,
                      const std::vector<DqnTransition>& batch, double discount);

// Trains a vanilla DQN on the single-message rate-constrained MDP (binary
// action, replay buffer, target net, epsilon-greedy) and evaluates the
// greedy policy. penalty_row gives the per-age penalties, oldest-age entry
// accumulating.
DqnResult latency_rate_dqn(double lambda, const std::vector<double>& penalty_row,
                           double target_rate, const DqnConfig& config = {});

// --- the two-step upper bound ---------------------------------------------

// Least possible energy per multicast: duration x energy constant / best gain.
Grid<double> min_energy_table(const Grid<int>& duration_table, const Grid<double>& energy_const,
                              double max_gain);

struct RateMatrix {
  Grid<double> rates;  // multicast starts per slot, message x channel
};

struct BoundResult {
  RateMatrix rate_matrix;
  double value = 0.0;         // upper bound on the average reward
  double energy = 0.0;        // unweighted energy per slot at the optimum
  double latency_term = 0.0;  // sum of the per-message latency values
};

// Maximizes sum_n f_n(sum_m rate_{n,m}) - V sum e_{n,m} rate_{n,m} subject to
// per-channel capacity, exactly, over the concave piecewise-linear envelopes
// of the sampled curves. grid_step bounds the allowed sample spacing.
BoundResult solve_p51(const std::vector<LatencyRateCurve>& curves, const Grid<double>& energy,
                      const Grid<int>& duration_table, double tradeoff_v, double grid_step);

// Upper-bound dominance with Monte Carlo slack.
inline bool dominance_check(double bound_value, double policy_avg_reward, double policy_se) {
  return bound_value >= policy_avg_reward - 3.0 * policy_se;
}

}  // namespace bound
}  // namespace mcsched
