#include "mcsched/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mcsched {
namespace baselines {

JointAction round_robin(const EnvState& state, int n_messages, int& cycle_position) {
  const int m_channels = static_cast<int>(state.channel_avail.size());
  JointAction action;
  action.choices.assign(m_channels, 0);
  std::vector<bool> used(n_messages, false);
  for (int m = 0; m < m_channels; ++m) {
    if (state.channel_avail[m] > 0) continue;
    for (int probe = 0; probe < n_messages; ++probe) {
      const int candidate = (cycle_position + probe) % n_messages;
      if (used[candidate]) continue;
      used[candidate] = true;
      action.choices[m] = candidate + 1;
      cycle_position = (candidate + 1) % n_messages;
      break;
    }
  }
  return action;
}

namespace {

// Expected reward of one simulated slot stream under a fixed threshold.
SweepPoint score_threshold(int threshold, double lambda, double tradeoff_v, double energy_const,
                           const std::vector<double>& gain_support, double penalty,
                           const StoppingOptions& options) {
  RngStream arrivals(options.seed, "stopping/arrivals");
  RngStream gains(options.seed, "stopping/gains");
  const double top = *std::max_element(gain_support.begin(), gain_support.end());

  long count = 0;
  double worst = top;
  double sum_reward = 0.0;
  long counted = 0;
  double batch_acc = 0.0;
  int batch_fill = 0;
  const int batch_len = 1000;
  std::vector<double> batch_means;

  for (long slot = 1; slot <= options.slots_per_candidate; ++slot) {
    double reward = -penalty * static_cast<double>(count);
    const bool multicast = count > threshold;
    if (multicast) reward -= tradeoff_v * energy_const / worst;

    const int fresh = arrivals.poisson(lambda);
    double fresh_worst = top;
    for (int q = 0; q < fresh; ++q) fresh_worst = std::min(fresh_worst, gains.pick(gain_support));
    if (multicast) {
      count = fresh;
      worst = fresh > 0 ? fresh_worst : top;
    } else {
      count += fresh;
      worst = std::min(worst, fresh_worst);
    }

    if (slot <= options.warmup) continue;
    ++counted;
    sum_reward += reward;
    batch_acc += reward;
    if (++batch_fill == batch_len) {
      batch_means.push_back(batch_acc / batch_len);
      batch_acc = 0.0;
      batch_fill = 0;
    }
  }

  SweepPoint point;
  point.threshold = threshold;
  point.value = counted > 0 ? sum_reward / counted : 0.0;
  if (batch_means.size() >= 2) {
    double mean = 0.0;
    for (double b : batch_means) mean += b;
    mean /= static_cast<double>(batch_means.size());
    double var = 0.0;
    for (double b : batch_means) var += (b - mean) * (b - mean);
    var /= static_cast<double>(batch_means.size() - 1);
    point.se = std::sqrt(var / static_cast<double>(batch_means.size()));
  }
  return point;
}

}  // namespace

StoppingSolution solve_optimal_stopping(double lambda, double tradeoff_v, double energy_const,
                                        int duration, const std::vector<double>& gain_support,
                                        double penalty, const StoppingOptions& options) {
  if (duration != 1)
    throw std::invalid_argument("solve_optimal_stopping: requires unit multicast duration");
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_optimal_stopping: lambda must be > 0");
  if (gain_support.empty())
    throw std::invalid_argument("solve_optimal_stopping: empty gain support");

  StoppingSolution sol;
  int best = -1;
  const int hard_cap = 500;
  const int limit = options.q_max > 0 ? options.q_max : hard_cap;
  int decline_run = 0;

  for (int thr = 0; thr <= limit; ++thr) {
    sol.sweep.push_back(score_threshold(thr, lambda, tradeoff_v, energy_const, gain_support,
                                        penalty, options));
    if (best < 0 || sol.sweep[thr].value > sol.sweep[best].value) {
      best = thr;
      decline_run = 0;
    } else {
      ++decline_run;
    }
    // In auto mode stop once the sweep has clearly passed the peak.
    if (options.q_max == 0 && decline_run >= 3 && thr >= 5) break;
  }

  if (best == static_cast<int>(sol.sweep.size()) - 1)
    throw std::runtime_error(
        "solve_optimal_stopping: optimum at the sweep boundary; retry with a larger q_max");

  sol.policy.threshold = best;
  sol.value = sol.sweep[best].value;
  sol.se = sol.sweep[best].se;
  return sol;
}

JointAction ThresholdSchedulingPolicy::decide(const EnvState& state) {
  if (state.request_matrix.rows() != 1 || state.channel_avail.size() != 1)
    throw std::invalid_argument("ThresholdSchedulingPolicy: single-message single-channel only");
  JointAction action;
  action.choices.assign(1, 0);
  if (state.channel_avail[0] > 0) return action;
  long count = 0;
  for (int tau = 0; tau < state.request_matrix.cols(); ++tau)
    count += state.request_matrix(0, tau);
  if (count > policy_.threshold) action.choices[0] = 1;
  return action;
}

namespace {

// Truncated-arrival transition rows: next = min(base + A, cap) with the tail
// mass collapsed into the cap state.
struct CountChain {
  int cap;
  std::vector<double> pmf;   // Poisson pmf 0..cap
  std::vector<double> tail;  // tail(k) = P(A >= k), 0..cap+1

  CountChain(double lambda, int cap_in) : cap(cap_in), pmf(cap + 1), tail(cap + 2) {
    double p = std::exp(-lambda);
    double cum = 0.0;
    for (int k = 0; k <= cap; ++k) {
      pmf[k] = p;
      cum += p;
      p *= lambda / (k + 1);
    }
    tail[cap + 1] = std::max(0.0, 1.0 - cum);
    for (int k = cap; k >= 0; --k) tail[k] = tail[k + 1] + pmf[k];
  }

  // P(next = k | base), accumulating from `base`.
  double prob(int base, int k) const {
    if (k < base || k > cap) return 0.0;
    if (k < cap) return pmf[k - base];
    return tail[cap - base];
  }
};

// E[1/min of k i.i.d. draws] over the gain support; k = 0 falls back to the
// best gain (an empty multicast resets the status).
std::vector<double> expected_inverse_worst(const std::vector<double>& support, int cap) {
  std::vector<double> sorted = support;
  std::sort(sorted.begin(), sorted.end());
  const double top = sorted.back();
  const int k_support = static_cast<int>(sorted.size());
  std::vector<double> out(cap + 1, 1.0 / top);
  for (int k = 1; k <= cap; ++k) {
    double acc = 0.0;
    for (int i = 0; i < k_support; ++i) {
      // P(min >= sorted[i])^k - P(min >= sorted[i+1])^k
      const double ge_i = static_cast<double>(k_support - i) / k_support;
      const double ge_next = static_cast<double>(k_support - i - 1) / k_support;
      const double p_min = std::pow(ge_i, k) - std::pow(ge_next, k);
      acc += p_min / sorted[i];
    }
    out[k] = acc;
  }
  return out;
}

struct RviModel {
  int cap;
  CountChain chain1, chain2;
  std::vector<double> energy1, energy2;  // expected multicast energy by count
  std::array<double, 2> penalty;
  double tradeoff_v;

  RviModel(double lambda1, double lambda2, int cap_in, const RviOptions& opts)
      : cap(cap_in), chain1(lambda1, cap_in), chain2(lambda2, cap_in), penalty(opts.penalty),
        tradeoff_v(opts.tradeoff_v) {
    if (opts.tradeoff_v > 0.0) {
      if (opts.gain_support.empty())
        throw std::invalid_argument("rvi_solve: gain support required when tradeoff_v > 0");
      const auto inv = expected_inverse_worst(opts.gain_support, cap);
      energy1.resize(cap + 1);
      energy2.resize(cap + 1);
      for (int k = 0; k <= cap; ++k) {
        energy1[k] = opts.tradeoff_v * opts.energy_const * inv[k];
        energy2[k] = energy1[k];
      }
    } else {
      energy1.assign(cap + 1, 0.0);
      energy2.assign(cap + 1, 0.0);
    }
  }

  double reward(int i, int j, int action) const {
    double r = -(penalty[0] * i + penalty[1] * j);
    if (action == 1) r -= energy1[i];
    if (action == 2) r -= energy2[j];
    return r;
  }

  // One Bellman sweep: returns the maximizing values and fills the greedy
  // actions (lowest index on ties).
  void sweep(const std::vector<double>& v, std::vector<double>& out,
             std::vector<int>* actions) const {
    const int side = cap + 1;
    // stage 1: contract the second coordinate for both of its modes
    // acc[j][i'] = sum_j' P2(j'|j, mode) v(i', j')
    std::vector<double> keep2(side * side, 0.0), reset2(side, 0.0);
    for (int ip = 0; ip < side; ++ip) {
      double reset_acc = 0.0;
      for (int jp = 0; jp < side; ++jp) reset_acc += chain2.prob(0, jp) * v[ip * side + jp];
      reset2[ip] = reset_acc;
    }
    for (int j = 0; j < side; ++j)
      for (int ip = 0; ip < side; ++ip) {
        double acc = 0.0;
        for (int jp = j; jp < side; ++jp) acc += chain2.prob(j, jp) * v[ip * side + jp];
        keep2[j * side + ip] = acc;
      }

    for (int i = 0; i < side; ++i) {
      for (int j = 0; j < side; ++j) {
        double q[3];
        // action 0: both accumulate; action 1: message 1 resets; action 2:
        // message 2 resets
        double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0;
        for (int ip = i; ip < side; ++ip) acc0 += chain1.prob(i, ip) * keep2[j * side + ip];
        for (int ip = 0; ip < side; ++ip) acc1 += chain1.prob(0, ip) * keep2[j * side + ip];
        for (int ip = i; ip < side; ++ip) acc2 += chain1.prob(i, ip) * reset2[ip];
        q[0] = reward(i, j, 0) + acc0;
        q[1] = reward(i, j, 1) + acc1;
        q[2] = reward(i, j, 2) + acc2;
        int best = 0;
        for (int a = 1; a < 3; ++a)
          if (q[a] > q[best]) best = a;
        out[i * side + j] = q[best];
        if (actions) (*actions)[i * side + j] = best;
      }
    }
  }
};

}  // namespace

TabularPolicy rvi_solve(double lambda1, double lambda2, int cap, const RviOptions& options,
                        std::vector<double>* values_out) {
  if (cap < 1) throw std::invalid_argument("rvi_solve: cap must be >= 1");
  if (!(lambda1 > 0.0 && lambda2 > 0.0))
    throw std::invalid_argument("rvi_solve: arrival rates must be > 0");
  const RviModel model(lambda1, lambda2, cap, options);
  const int side = cap + 1;
  const int n_states = side * side;

  std::vector<double> v(n_states, 0.0), w(n_states, 0.0);
  double gain = 0.0;
  bool converged = false;
  for (long iter = 0; iter < options.max_iter; ++iter) {
    model.sweep(v, w, nullptr);
    double lo = w[0] - v[0], hi = w[0] - v[0];
    for (int s = 1; s < n_states; ++s) {
      const double d = w[s] - v[s];
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    gain = 0.5 * (lo + hi);
    const double ref = w[0];
    for (int s = 0; s < n_states; ++s) v[s] = w[s] - ref;
    if (hi - lo < options.tol) {
      converged = true;
      break;
    }
  }
  if (!converged) throw std::runtime_error("rvi_solve: no convergence within the iteration cap");

  std::vector<int> actions(n_states, 0);
  model.sweep(v, w, &actions);
  if (values_out) *values_out = v;

  TabularPolicy policy;
  policy.cap = cap;
  policy.gain = gain;
  policy.table = Grid<int>(side, side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) policy.table(i, j) = actions[i * side + j];
  return policy;
}

Grid<int> rvi_greedy_once(int cap, const std::vector<double>& values, double lambda1,
                          double lambda2, const RviOptions& options) {
  const RviModel model(lambda1, lambda2, cap, options);
  const int side = cap + 1;
  if (static_cast<int>(values.size()) != side * side)
    throw std::invalid_argument("rvi_greedy_once: value vector size mismatch");
  std::vector<double> w(side * side, 0.0);
  std::vector<int> actions(side * side, 0);
  model.sweep(values, w, &actions);
  Grid<int> out(side, side);
  for (int i = 0; i < side; ++i)
    for (int j = 0; j < side; ++j) out(i, j) = actions[i * side + j];
  return out;
}

JointAction TabularSchedulingPolicy::decide(const EnvState& state) {
  if (state.request_matrix.rows() != 2 || state.channel_avail.size() != 1)
    throw std::invalid_argument("TabularSchedulingPolicy: two-message single-channel only");
  JointAction action;
  action.choices.assign(1, 0);
  if (state.channel_avail[0] > 0) return action;
  long c1 = 0, c2 = 0;
  for (int tau = 0; tau < state.request_matrix.cols(); ++tau) {
    c1 += state.request_matrix(0, tau);
    c2 += state.request_matrix(1, tau);
  }
  const int i = static_cast<int>(std::min<long>(c1, policy_.cap));
  const int j = static_cast<int>(std::min<long>(c2, policy_.cap));
  action.choices[0] = policy_.table(i, j);
  return action;
}

ResolvedAction unconstrained_sample(const std::vector<CategoricalPolicy>& policies,
                                    RngStream& rng) {
  ResolvedAction out;
  out.joint.choices.resize(policies.size());
  out.stored_probs.resize(policies.size());
  for (std::size_t m = 0; m < policies.size(); ++m) {
    policies[m].validate();
    const int a = policies[m].sample(rng);
    out.joint.choices[m] = a;
    out.stored_probs[m] = policies[m].probs[a];
  }
  return out;
}

std::vector<std::pair<int, int>> extract_switch_curve(const TabularPolicy& policy) {
  std::vector<std::pair<int, int>> curve;
  for (int i = 0; i <= policy.cap; ++i) {
    for (int j = 0; j <= policy.cap; ++j) {
      if (policy.table(i, j) == 2) {
        curve.emplace_back(i, j);
        break;
      }
    }
  }
  return curve;
}

}  // namespace baselines
}  // namespace mcsched
