#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mcsched/bound.hpp"
#include "mcsched/env.hpp"

namespace mcsched {
namespace bound {

DqnLossTerms dqn_loss(const DenseNet& online, const DenseNet& target,
                      const std::vector<DqnTransition>& batch, double discount) {
  if (batch.empty()) throw std::invalid_argument("dqn_loss: empty batch");
  DqnLossTerms terms;
  terms.grads = online.zero_gradients();
  for (const DqnTransition& tr : batch) {
    ForwardTape tape;
    const std::vector<double> qvals = online.forward(tr.state, tape);
    const std::vector<double> next_q = target.forward(tr.next_state);
    const double best_next = *std::max_element(next_q.begin(), next_q.end());
    const double y = tr.reward + discount * best_next;
    const double err = qvals[tr.action] - y;
    terms.loss += err * err;
    std::vector<double> out_grad(qvals.size(), 0.0);
    out_grad[tr.action] = 2.0 * err;
    terms.grads.add(online.backward(tape, out_grad));
  }
  const double inv = 1.0 / static_cast<double>(batch.size());
  terms.loss *= inv;
  terms.grads.scale(inv);
  return terms;
}

namespace {

struct RateMdp {
  double lambda;
  std::vector<double> penalty_row;
  double inv_rate;       // slot budget per multicast
  double weight;         // quadratic deviation scale
  double feature_clip_q;
  double z_clip;

  std::vector<int> q_vec;
  double z = 1.0;

  RateMdp(double lambda_in, std::vector<double> penalties, double target_rate, double w,
          double z_clip_in)
      : lambda(lambda_in),
        penalty_row(std::move(penalties)),
        inv_rate(1.0 / target_rate),
        weight(w),
        feature_clip_q(10.0),
        z_clip(z_clip_in),
        q_vec(penalty_row.size(), 0) {}

  void reset(RngStream& rng) {
    std::fill(q_vec.begin(), q_vec.end(), 0);
    q_vec[0] = rng.poisson(lambda);
    z = 1.0;
  }

  double penalty() const {
    double p = 0.0;
    for (std::size_t tau = 0; tau < q_vec.size(); ++tau) p += q_vec[tau] * penalty_row[tau];
    return p;
  }

  // Raw reward of taking `action` in the current state: the latency penalty
  // plus the squared budget residual the action leaves behind. Charging the
  // residual every slot enforces the multicast-rate budget from both sides;
  // charging it only on multicast slots lets a discounted learner defer the
  // recovery multicast forever.
  double reward(int action) const {
    double r = -penalty();
    const double residual = next_z(action) / inv_rate - 1.0;  // budget units
    r -= weight * residual * residual;
    return r;
  }

  double next_z(int action) const {
    const double moved = z + 1.0 - (action == 1 ? inv_rate : 0.0);
    return std::clamp(moved, -z_clip * inv_rate, z_clip * inv_rate);
  }

  void advance(int action, RngStream& rng) {
    const int fresh = rng.poisson(lambda);
    q_vec = shift_request_vector(q_vec, fresh, action == 1);
    // The residual state is kept bounded: far outside the band every state
    // is equally overdue.
    z = next_z(action);
  }

  std::vector<double> features() const {
    std::vector<double> f;
    f.reserve(q_vec.size() + 1);
    const double q_scale = lambda > 0.0 ? 1.0 / lambda : 1.0;
    for (int q : q_vec) f.push_back(std::min(q * q_scale, feature_clip_q));
    f.push_back(z / inv_rate);  // budget units, bounded by the clamp above
    return f;
  }
};

}  // namespace

DqnResult latency_rate_dqn(double lambda, const std::vector<double>& penalty_row,
                           double target_rate, const DqnConfig& config) {
  if (lambda < 0.0) throw std::invalid_argument("latency_rate_dqn: negative rate");
  if (penalty_row.empty()) throw std::invalid_argument("latency_rate_dqn: empty penalty row");
  if (!(target_rate > 0.0) || target_rate > 1.0 + 1e-12)
    throw std::invalid_argument("latency_rate_dqn: target rate must lie in (0, 1]");

  RngStream init_rng(config.seed, "dqn/init");
  RngStream env_rng(config.seed, "dqn/env");
  RngStream explore_rng(config.seed, "dqn/explore");
  RngStream replay_rng(config.seed, "dqn/replay");

  const int input_dim = static_cast<int>(penalty_row.size()) + 1;
  std::vector<int> sizes;
  sizes.push_back(input_dim);
  sizes.insert(sizes.end(), config.hidden.begin(), config.hidden.end());
  sizes.push_back(2);
  DenseNet online(sizes, config.activation, OutputHead::kLinear);
  online.init_params(init_rng);
  DenseNet target = online;

  // Reward scale for training only; the greedy policy is invariant to it.
  const double scale = 1.0 + lambda * penalty_row[0];

  RateMdp mdp(lambda, penalty_row, std::min(target_rate, 1.0), config.rate_penalty_weight,
              config.z_clip);
  mdp.reset(env_rng);

  std::vector<DqnTransition> replay;
  replay.reserve(config.replay_capacity);
  std::size_t write_pos = 0;

  for (long step = 1; step <= config.train_steps; ++step) {
    const std::vector<double> state = mdp.features();
    const double frac =
        std::min(1.0, static_cast<double>(step) / static_cast<double>(config.eps_decay_steps));
    const double eps = config.eps_start + frac * (config.eps_end - config.eps_start);

    int action;
    if (explore_rng.uniform01() < eps) {
      action = static_cast<int>(explore_rng.uniform_index(2));
    } else {
      const std::vector<double> q = online.forward(state);
      action = q[1] > q[0] ? 1 : 0;
    }

    DqnTransition tr;
    tr.state = state;
    tr.action = action;
    tr.reward = mdp.reward(action) / scale;
    mdp.advance(action, env_rng);
    tr.next_state = mdp.features();

    if (static_cast<int>(replay.size()) < config.replay_capacity) {
      replay.push_back(std::move(tr));
    } else {
      replay[write_pos] = std::move(tr);
      write_pos = (write_pos + 1) % replay.size();
    }

    if (static_cast<int>(replay.size()) >= config.min_replay) {
      std::vector<DqnTransition> batch(config.batch_size);
      for (int b = 0; b < config.batch_size; ++b)
        batch[b] = replay[replay_rng.uniform_index(replay.size())];
      const DqnLossTerms terms = dqn_loss(online, target, batch, config.discount);
      online.optimizer_step(terms.grads, config.learning_rate);
    }
    if (step % config.target_sync == 0) target = online;
  }

  // Greedy-policy evaluation on a fresh stream.
  RngStream eval_rng(config.seed, "dqn/eval");
  mdp.reset(eval_rng);
  double penalty_sum = 0.0;
  long counted = 0, multicasts = 0;
  for (long slot = 1; slot <= config.eval_slots; ++slot) {
    const std::vector<double> q = online.forward(mdp.features());
    const int action = q[1] > q[0] ? 1 : 0;
    if (slot > config.eval_warmup) {
      ++counted;
      penalty_sum += mdp.penalty();
      if (action == 1) ++multicasts;
    }
    mdp.advance(action, eval_rng);
  }

  DqnResult result;
  result.f_value = counted > 0 ? -penalty_sum / counted : 0.0;
  result.achieved_rate = counted > 0 ? static_cast<double>(multicasts) / counted : 0.0;
  result.reliable = std::abs(result.achieved_rate - target_rate) <= 0.1 * target_rate;
  return result;
}

}  // namespace bound
}  // namespace mcsched
