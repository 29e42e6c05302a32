#include "mcsched/env.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace mcsched {

double EnvConfig::max_gain() const {
  if (gain_support.empty()) throw std::invalid_argument("EnvConfig: empty gain support");
  return *std::max_element(gain_support.begin(), gain_support.end());
}

void EnvConfig::validate() const {
  if (n_messages < 1) throw std::invalid_argument("EnvConfig: n_messages must be positive");
  if (n_channels < 1) throw std::invalid_argument("EnvConfig: n_channels must be positive");
  if (buffer_len < 2) throw std::invalid_argument("EnvConfig: buffer_len must be >= 2");
  if (static_cast<int>(arrival_rates.size()) != n_messages)
    throw std::invalid_argument("EnvConfig: arrival_rates size mismatch");
  for (double r : arrival_rates)
    if (!(r > 0.0)) throw std::invalid_argument("EnvConfig: arrival rates must be positive");
  if (duration_table.rows() != n_messages || duration_table.cols() != n_channels)
    throw std::invalid_argument("EnvConfig: duration_table shape mismatch");
  for (int v : duration_table.data())
    if (v < 1) throw std::invalid_argument("EnvConfig: durations must be >= 1");
  if (energy_const.rows() != n_messages || energy_const.cols() != n_channels)
    throw std::invalid_argument("EnvConfig: energy_const shape mismatch");
  for (double v : energy_const.data())
    if (!(v > 0.0)) throw std::invalid_argument("EnvConfig: energy constants must be positive");
  if (tradeoff_v < 0.0) throw std::invalid_argument("EnvConfig: tradeoff_v must be >= 0");
  if (penalty_fn.rows() != n_messages || penalty_fn.cols() != buffer_len)
    throw std::invalid_argument("EnvConfig: penalty_fn shape mismatch");
  for (double v : penalty_fn.data())
    if (v < 0.0) throw std::invalid_argument("EnvConfig: penalties must be >= 0");
  if (gain_support.empty()) throw std::invalid_argument("EnvConfig: empty gain support");
  for (double g : gain_support)
    if (!(g > 0.0)) throw std::invalid_argument("EnvConfig: gains must be positive");
}

std::vector<double> EnvState::flatten() const {
  std::vector<double> out;
  out.reserve(request_matrix.size() + channel_avail.size() + channel_status.size());
  for (int v : request_matrix.data()) out.push_back(static_cast<double>(v));
  for (int v : channel_avail) out.push_back(static_cast<double>(v));
  for (double v : channel_status.data()) out.push_back(v);
  return out;
}

std::vector<double> AgentObservation::flatten() const {
  std::vector<double> out;
  out.reserve(request_matrix.size() + 1 + own_gains.size());
  for (int v : request_matrix.data()) out.push_back(static_cast<double>(v));
  out.push_back(static_cast<double>(own_avail));
  for (double v : own_gains) out.push_back(v);
  return out;
}

std::vector<int> shift_request_vector(const std::vector<int>& q_vec, int new_count,
                                      bool multicast) {
  const int len = static_cast<int>(q_vec.size());
  std::vector<int> out(len, 0);
  out[0] = new_count;
  if (!multicast) {
    for (int tau = 1; tau + 1 < len; ++tau) out[tau] = q_vec[tau - 1];
    out[len - 1] = q_vec[len - 2] + q_vec[len - 1];
  }
  return out;
}

double update_channel_status(double g_old, const std::vector<double>& new_request_gains,
                             bool multicast, double max_gain) {
  double fresh = max_gain;
  bool any = false;
  for (double g : new_request_gains) {
    fresh = any ? std::min(fresh, g) : g;
    any = true;
  }
  if (multicast) return any ? fresh : max_gain;
  return any ? std::min(g_old, fresh) : g_old;
}

double instant_latency_penalty(const Grid<int>& request_matrix, const Grid<double>& penalty_fn) {
  double total = 0.0;
  for (int n = 0; n < request_matrix.rows(); ++n)
    for (int tau = 0; tau < request_matrix.cols(); ++tau)
      total += request_matrix(n, tau) * penalty_fn(n, tau);
  return total;
}

bool feasible(const EnvState& state, const JointAction& action) {
  const int m_channels = static_cast<int>(state.channel_avail.size());
  if (static_cast<int>(action.choices.size()) != m_channels)
    throw std::invalid_argument("feasible: action/state channel count mismatch");
  for (int m = 0; m < m_channels; ++m)
    if (state.channel_avail[m] > 0 && action.choices[m] != 0) return false;
  for (int m = 0; m < m_channels; ++m) {
    if (action.choices[m] == 0) continue;
    for (int m2 = m + 1; m2 < m_channels; ++m2)
      if (action.choices[m] == action.choices[m2]) return false;
  }
  return true;
}

EnvState transition(const EnvConfig& cfg, const EnvState& state, const JointAction& action,
                    const std::vector<int>& arrivals,
                    const std::vector<Grid<double>>& request_gains) {
  const int n_msgs = cfg.n_messages;
  const int m_channels = cfg.n_channels;
  const double top = cfg.max_gain();

  EnvState next;
  next.clock = state.clock + 1;
  next.request_matrix = Grid<int>(n_msgs, cfg.buffer_len);
  next.channel_avail.assign(m_channels, 0);
  next.channel_status = Grid<double>(n_msgs, m_channels);

  std::vector<bool> multicast(n_msgs, false);
  for (int m = 0; m < m_channels; ++m)
    if (action.choices[m] > 0) multicast[action.choices[m] - 1] = true;

  for (int n = 0; n < n_msgs; ++n)
    next.request_matrix.set_row(
        n, shift_request_vector(state.request_matrix.row(n), arrivals[n], multicast[n]));

  for (int m = 0; m < m_channels; ++m) {
    if (state.channel_avail[m] > 0) {
      next.channel_avail[m] = state.channel_avail[m] - 1;
    } else if (action.choices[m] > 0) {
      next.channel_avail[m] = cfg.duration_table(action.choices[m] - 1, m) - 1;
    }
  }

  for (int n = 0; n < n_msgs; ++n) {
    for (int m = 0; m < m_channels; ++m) {
      std::vector<double> gains(arrivals[n]);
      for (int q = 0; q < arrivals[n]; ++q) gains[q] = request_gains[n](q, m);
      next.channel_status(n, m) =
          update_channel_status(state.channel_status(n, m), gains, multicast[n], top);
    }
  }
  return next;
}

EnvState init_state(const EnvConfig& cfg) {
  cfg.validate();
  EnvState s;
  s.request_matrix = Grid<int>(cfg.n_messages, cfg.buffer_len, 0);
  s.channel_avail.assign(cfg.n_channels, 0);
  s.channel_status = Grid<double>(cfg.n_messages, cfg.n_channels, cfg.max_gain());
  s.clock = 1;
  return s;
}

Environment::Environment(EnvConfig cfg)
    : cfg_(std::move(cfg)),
      state_(init_state(cfg_)),
      arrivals_rng_(cfg_.seed, "env/arrivals"),
      gains_rng_(cfg_.seed, "env/gains") {}

void Environment::reset() { state_ = init_state(cfg_); }

bool Environment::feasible(const JointAction& action) const {
  return mcsched::feasible(state_, action);
}

AgentObservation observe(const EnvState& state, int channel) {
  if (channel < 0 || channel >= static_cast<int>(state.channel_avail.size()))
    throw std::out_of_range("observe: channel index out of range");
  AgentObservation obs;
  obs.request_matrix = state.request_matrix;
  obs.own_avail = state.channel_avail[channel];
  obs.own_gains.resize(state.channel_status.rows());
  for (int n = 0; n < state.channel_status.rows(); ++n)
    obs.own_gains[n] = state.channel_status(n, channel);
  return obs;
}

AgentObservation Environment::observe(int channel) const {
  return mcsched::observe(state_, channel);
}

StepOutcome Environment::step(const JointAction& action) {
  if (static_cast<int>(action.choices.size()) != cfg_.n_channels)
    throw std::invalid_argument("step: action channel count mismatch");
  for (int m = 0; m < cfg_.n_channels; ++m) {
    if (state_.channel_avail[m] > 0 && action.choices[m] != 0)
      throw std::invalid_argument("step: busy channel " + std::to_string(m + 1) +
                                  " scheduled for a new multicast");
    if (action.choices[m] < 0 || action.choices[m] > cfg_.n_messages)
      throw std::invalid_argument("step: message choice out of range on channel " +
                                  std::to_string(m + 1));
  }
  for (int m = 0; m < cfg_.n_channels; ++m) {
    if (action.choices[m] == 0) continue;
    for (int m2 = m + 1; m2 < cfg_.n_channels; ++m2)
      if (action.choices[m] == action.choices[m2])
        throw std::invalid_argument("step: message " + std::to_string(action.choices[m]) +
                                    " started on two channels in the same slot");
  }
  return step_impl(action, false);
}

StepOutcome Environment::step_allow_duplicate_starts(const JointAction& action) {
  if (static_cast<int>(action.choices.size()) != cfg_.n_channels)
    throw std::invalid_argument("step: action channel count mismatch");
  for (int m = 0; m < cfg_.n_channels; ++m) {
    if (state_.channel_avail[m] > 0 && action.choices[m] != 0)
      throw std::invalid_argument("step: busy channel " + std::to_string(m + 1) +
                                  " scheduled for a new multicast");
    if (action.choices[m] < 0 || action.choices[m] > cfg_.n_messages)
      throw std::invalid_argument("step: message choice out of range on channel " +
                                  std::to_string(m + 1));
  }
  return step_impl(action, true);
}

StepOutcome Environment::step_impl(const JointAction& action, bool /*allow_duplicates*/) {
  StepOutcome out;

  // Reward is charged against the pre-transition state: the full energy of a
  // multicast at its start slot plus the instant latency penalty of all
  // buffered requests.
  for (int m = 0; m < cfg_.n_channels; ++m) {
    const int choice = action.choices[m];
    if (choice > 0) {
      const int n = choice - 1;
      out.energy += cfg_.duration_table(n, m) * cfg_.energy_const(n, m) / state_.channel_status(n, m);
    }
  }
  out.latency_penalty = instant_latency_penalty(state_.request_matrix, cfg_.penalty_fn);
  out.reward = -(cfg_.tradeoff_v * out.energy + out.latency_penalty);

  std::vector<int> arrivals(cfg_.n_messages);
  std::vector<Grid<double>> request_gains(cfg_.n_messages);
  for (int n = 0; n < cfg_.n_messages; ++n) {
    arrivals[n] = arrivals_rng_.poisson(cfg_.arrival_rates[n]);
    request_gains[n] = Grid<double>(arrivals[n], cfg_.n_channels);
    for (int q = 0; q < arrivals[n]; ++q)
      for (int m = 0; m < cfg_.n_channels; ++m)
        request_gains[n](q, m) = gains_rng_.pick(cfg_.gain_support);
  }

  out.next = transition(cfg_, state_, action, arrivals, request_gains);
  state_ = out.next;
  return out;
}

}  // namespace mcsched
