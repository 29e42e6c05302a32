#pragma once

#include <array>
#include <cstdint>
#include <utility>
#include <vector>

#include "mcsched/de.hpp"
#include "mcsched/env.hpp"
#include "mcsched/grid.hpp"
#include "mcsched/trainer.hpp"

namespace mcsched {
namespace baselines {

// Free channels take the next messages in cyclic order, skipping messages
// already started this slot; busy channels idle.
JointAction round_robin(const EnvState& state, int n_messages, int& cycle_position);

class RoundRobinPolicy : public SchedulingPolicy {
 public:
  explicit RoundRobinPolicy(int n_messages) : n_messages_(n_messages) {}
  JointAction decide(const EnvState& state) override {
    return round_robin(state, n_messages_, cursor_);
  }

 private:
  int n_messages_;
  int cursor_ = 0;
};

// Multicast exactly when the total buffered count exceeds the threshold.
struct ThresholdPolicy {
  int threshold = 0;
};

struct SweepPoint {
  int threshold = 0;
  double value = 0.0;
  double se = 0.0;
};

struct StoppingSolution {
  ThresholdPolicy policy;
  double value = 0.0;  // long-run average reward at the best threshold
  double se = 0.0;
  std::vector<SweepPoint> sweep;
};

struct StoppingOptions {
  std::uint64_t seed = 1;
  long slots_per_candidate = 1000000;
  long warmup = 1000;
  int q_max = 0;  // 0: extend the sweep until the optimum is interior
};

// Single-message single-channel threshold search by sweeping thresholds and
// scoring each with a seeded renewal simulation (common random numbers).
// Requires unit durations and a flat penalty.
StoppingSolution solve_optimal_stopping(double lambda, double tradeoff_v, double energy_const,
                                        int duration, const std::vector<double>& gain_support,
                                        double penalty = 1.0, const StoppingOptions& options = {});

class ThresholdSchedulingPolicy : public SchedulingPolicy {
 public:
  explicit ThresholdSchedulingPolicy(ThresholdPolicy policy) : policy_(policy) {}
  JointAction decide(const EnvState& state) override;

 private:
  ThresholdPolicy policy_;
};

// Greedy table over capped aggregate counts for the two-message single-
// channel chain, with its average-reward gain.
struct TabularPolicy {
  int cap = 0;
  Grid<int> table;     // (count_1, count_2) -> action in {0, 1, 2}
  double gain = 0.0;
};

struct RviOptions {
  double tradeoff_v = 0.0;
  double energy_const = 500.0;
  std::vector<double> gain_support;        // needed only when tradeoff_v > 0
  std::array<double, 2> penalty = {1.0, 1.0};
  double tol = 1e-9;
  long max_iter = 1000000;
};

// Relative value iteration on the truncated two-message chain (arrival mass
// beyond the cap collapses into the cap state). Reference state (0,0), ties
// broken toward the lowest action index. Converged relative values are
// written to values_out when given.
TabularPolicy rvi_solve(double lambda1, double lambda2, int cap, const RviOptions& options = {},
                        std::vector<double>* values_out = nullptr);

// One more Bellman sweep from the given relative values; used to confirm the
// greedy table is a fixed point.
Grid<int> rvi_greedy_once(int cap, const std::vector<double>& values, double lambda1,
                          double lambda2, const RviOptions& options = {});

class TabularSchedulingPolicy : public SchedulingPolicy {
 public:
  explicit TabularSchedulingPolicy(TabularPolicy policy) : policy_(std::move(policy)) {}
  JointAction decide(const EnvState& state) override;

 private:
  TabularPolicy policy_;
};

// Ablation sampling: every agent draws independently from its own masked
// distribution, so two channels may start the same message.
ResolvedAction unconstrained_sample(const std::vector<CategoricalPolicy>& policies,
                                    RngStream& rng);

// For each count_1, the smallest count_2 at which the table switches to
// message 2; rows with no switch are omitted.
std::vector<std::pair<int, int>> extract_switch_curve(const TabularPolicy& policy);

}  // namespace baselines
}  // namespace mcsched
