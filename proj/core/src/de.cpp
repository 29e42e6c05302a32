#include "mcsched/de.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

namespace mcsched {

CategoricalPolicy CategoricalPolicy::degenerate(int n_actions, int action) {
  CategoricalPolicy p;
  p.probs.assign(n_actions, 0.0);
  p.probs.at(action) = 1.0;
  return p;
}

void CategoricalPolicy::validate(double tolerance) const {
  if (probs.empty()) throw std::invalid_argument("CategoricalPolicy: empty");
  double sum = 0.0;
  for (double v : probs) {
    if (v < 0.0 || !std::isfinite(v))
      throw std::invalid_argument("CategoricalPolicy: negative or non-finite probability");
    sum += v;
  }
  if (std::abs(sum - 1.0) > tolerance)
    throw std::invalid_argument("CategoricalPolicy: probabilities sum to " + std::to_string(sum));
}

double CategoricalPolicy::entropy() const {
  double h = 0.0;
  for (double p : probs)
    if (p > 0.0) h -= p * std::log(p);
  return h;
}

int CategoricalPolicy::sample(RngStream& rng) const {
  const double u = rng.uniform01();
  double cdf = 0.0;
  int last_positive = -1;
  for (int a = 0; a < static_cast<int>(probs.size()); ++a) {
    if (probs[a] <= 0.0) continue;
    cdf += probs[a];
    last_positive = a;
    if (u < cdf) return a;
  }
  // Rounding left u beyond the accumulated mass; fall back to the last
  // positive-probability action.
  if (last_positive < 0) throw std::invalid_argument("sample: no positive-probability action");
  return last_positive;
}

namespace de {

std::vector<int> random_order(int m, RngStream& rng) {
  if (m < 1) throw std::invalid_argument("random_order: m must be >= 1");
  std::vector<int> order(m);
  std::iota(order.begin(), order.end(), 0);
  for (int i = m - 1; i > 0; --i) {
    const int j = static_cast<int>(rng.uniform_index(static_cast<std::uint64_t>(i) + 1));
    std::swap(order[i], order[j]);
  }
  return order;
}

std::vector<CategoricalPolicy> modify(const std::vector<CategoricalPolicy>& policies,
                                      int chosen_action) {
  if (chosen_action == 0) return policies;
  std::vector<CategoricalPolicy> out;
  out.reserve(policies.size());
  for (const CategoricalPolicy& p : policies) {
    CategoricalPolicy q = p;
    if (chosen_action < 0 || chosen_action >= static_cast<int>(q.probs.size()))
      throw std::invalid_argument("modify: chosen action out of range");
    q.probs[chosen_action] = 0.0;
    double sum = 0.0;
    for (double v : q.probs) sum += v;
    if (sum <= 0.0) {
      q = CategoricalPolicy::degenerate(static_cast<int>(q.probs.size()), 0);
    } else {
      for (double& v : q.probs) v /= sum;
    }
    out.push_back(std::move(q));
  }
  return out;
}

ResolvedAction resolve(const std::vector<CategoricalPolicy>& policies, RngStream& order_rng,
                       RngStream& sample_rng) {
  const int m_agents = static_cast<int>(policies.size());
  if (m_agents < 1) throw std::invalid_argument("resolve: no policies");
  const std::size_t n_actions = policies[0].probs.size();
  for (const CategoricalPolicy& p : policies) {
    p.validate();
    if (p.probs.size() != n_actions)
      throw std::invalid_argument("resolve: inconsistent action counts");
  }

  const std::vector<int> order = random_order(m_agents, order_rng);

  ResolvedAction out;
  out.joint.choices.assign(m_agents, 0);
  out.stored_probs.assign(m_agents, 0.0);

  std::vector<CategoricalPolicy> working = policies;
  std::vector<int> remaining;
  for (int round = 0; round < m_agents; ++round) {
    const int agent = order[round];
    const int action = working[agent].sample(sample_rng);
    out.joint.choices[agent] = action;
    out.stored_probs[agent] = policies[agent].probs[action];

    if (round + 1 == m_agents || action == 0) continue;
    remaining.assign(order.begin() + round + 1, order.end());
    std::vector<CategoricalPolicy> rest;
    rest.reserve(remaining.size());
    for (int r : remaining) rest.push_back(working[r]);
    rest = modify(rest, action);
    for (std::size_t i = 0; i < remaining.size(); ++i) working[remaining[i]] = rest[i];
  }
  return out;
}

}  // namespace de
}  // namespace mcsched
