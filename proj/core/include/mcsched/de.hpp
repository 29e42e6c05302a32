#pragma once

#include <vector>

#include "mcsched/env.hpp"
#include "mcsched/rng.hpp"

namespace mcsched {

// Probability vector over the N+1 agent actions (0 = idle).
struct CategoricalPolicy {
  std::vector<double> probs;

  static CategoricalPolicy degenerate(int n_actions, int action);
  void validate(double tolerance = 1e-6) const;  // throws on bad distribution
  double entropy() const;
  int sample(RngStream& rng) const;  // never picks a zero-probability action
};

// Joint action resolved from per-agent policies, plus the original
// (pre-modification) probability each agent assigned to its chosen action.
struct ResolvedAction {
  JointAction joint;
  std::vector<double> stored_probs;
};

namespace de {

// Uniform random permutation of {0..m-1}: the order agents commit actions.
std::vector<int> random_order(int m, RngStream& rng);

// After one agent committed chosen_action, removes that message from every
// remaining policy and renormalizes each over its actions. A policy left
// with no mass collapses to the idle action. chosen_action 0 is a no-op.
std::vector<CategoricalPolicy> modify(const std::vector<CategoricalPolicy>& policies,
                                      int chosen_action);

// Sequentially samples all agents in a random order, modifying the
// remaining distributions after each pick, so no message is started twice
// in one slot.
ResolvedAction resolve(const std::vector<CategoricalPolicy>& policies, RngStream& order_rng,
                       RngStream& sample_rng);

}  // namespace de
}  // namespace mcsched
