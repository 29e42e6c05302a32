#include "mcsched/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace mcsched {

void PpoHyper::validate() const {
  if (n_buffer < 1) throw std::invalid_argument("PpoHyper: n_buffer must be >= 1");
  if (n_updates < 0) throw std::invalid_argument("PpoHyper: n_updates must be >= 0");
  if (!(discount > 0.0 && discount < 1.0) && discount != 0.0)
    throw std::invalid_argument("PpoHyper: discount must lie in [0, 1)");
  if (!(clip > 0.0 && clip < 1.0)) throw std::invalid_argument("PpoHyper: clip must lie in (0, 1)");
  if (value_coeff < 0.0 || entropy_coeff < 0.0)
    throw std::invalid_argument("PpoHyper: loss coefficients must be >= 0");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("PpoHyper: learning rate must be > 0");
}

ObservationEncoder::ObservationEncoder(const EnvConfig& cfg) {
  observation_dim_ = cfg.n_messages * cfg.buffer_len + 1 + cfg.n_messages;
  global_dim_ = cfg.n_messages * cfg.buffer_len + cfg.n_channels + cfg.n_messages * cfg.n_channels;
  q_scale_.resize(cfg.n_messages);
  for (int n = 0; n < cfg.n_messages; ++n)
    q_scale_[n] = 1.0 / (cfg.arrival_rates[n] * cfg.buffer_len);
  int max_duration = 1;
  for (int v : cfg.duration_table.data()) max_duration = std::max(max_duration, v);
  c_scale_ = 1.0 / max_duration;
  g_scale_ = 1.0 / cfg.max_gain();
}

std::vector<double> ObservationEncoder::encode_observation(const AgentObservation& obs) const {
  std::vector<double> out;
  out.reserve(observation_dim_);
  for (int n = 0; n < obs.request_matrix.rows(); ++n)
    for (int tau = 0; tau < obs.request_matrix.cols(); ++tau)
      out.push_back(std::min(obs.request_matrix(n, tau) * q_scale_[n], clip_at_));
  out.push_back(obs.own_avail * c_scale_);
  for (double g : obs.own_gains) out.push_back(g * g_scale_);
  return out;
}

std::vector<double> ObservationEncoder::encode_global(const EnvState& state) const {
  std::vector<double> out;
  out.reserve(global_dim_);
  for (int n = 0; n < state.request_matrix.rows(); ++n)
    for (int tau = 0; tau < state.request_matrix.cols(); ++tau)
      out.push_back(std::min(state.request_matrix(n, tau) * q_scale_[n], clip_at_));
  for (int avail : state.channel_avail) out.push_back(avail * c_scale_);
  for (double g : state.channel_status.data()) out.push_back(g * g_scale_);
  return out;
}

std::vector<double> compute_returns(const std::vector<double>& rewards, double discount) {
  if (rewards.empty()) throw std::invalid_argument("compute_returns: empty reward sequence");
  std::vector<double> returns(rewards.size());
  double acc = 0.0;
  for (int i = static_cast<int>(rewards.size()) - 1; i >= 0; --i) {
    acc = rewards[i] + discount * acc;
    returns[i] = acc;
  }
  return returns;
}

PpoAgent::PpoAgent(int channel, const EnvConfig& env_cfg, const std::vector<int>& actor_hidden,
                   const std::vector<int>& critic_hidden, Activation activation,
                   RngStream& init_rng)
    : channel_(channel), encoder_(env_cfg) {
  std::vector<int> actor_sizes;
  actor_sizes.push_back(encoder_.observation_dim());
  actor_sizes.insert(actor_sizes.end(), actor_hidden.begin(), actor_hidden.end());
  actor_sizes.push_back(env_cfg.n_messages + 1);
  actor_ = DenseNet(actor_sizes, activation, OutputHead::kSoftmax);
  actor_.init_params(init_rng);

  std::vector<int> critic_sizes;
  critic_sizes.push_back(encoder_.global_dim());
  critic_sizes.insert(critic_sizes.end(), critic_hidden.begin(), critic_hidden.end());
  critic_sizes.push_back(1);
  critic_ = DenseNet(critic_sizes, activation, OutputHead::kLinear);
  critic_.init_params(init_rng);
}

CategoricalPolicy PpoAgent::act_distribution(const AgentObservation& obs) const {
  if (obs.own_avail > 0) return CategoricalPolicy::degenerate(actor_.output_size(), 0);
  CategoricalPolicy policy;
  policy.probs = actor_.forward(encoder_.encode_observation(obs));
  return policy;
}

double PpoAgent::compute_ratio(const ExperienceRecord& record) const {
  if (record.forced) return 1.0;
  if (!(record.stored_prob > 0.0))
    throw std::runtime_error("compute_ratio: corrupted buffer, stored probability <= 0");
  const std::vector<double> probs = actor_.forward(record.agent_obs);
  return probs[record.agent_action] / record.stored_prob;
}

SurrogateTerms PpoAgent::surrogate_loss(const std::vector<ExperienceRecord>& batch,
                                        const std::vector<double>& returns,
                                        const std::vector<double>& advantages,
                                        const PpoHyper& hyper) const {
  if (batch.empty()) throw std::invalid_argument("surrogate_loss: empty batch");
  if (batch.size() != returns.size() || batch.size() != advantages.size())
    throw std::invalid_argument("surrogate_loss: batch/return/advantage size mismatch");

  SurrogateTerms terms;
  terms.actor_grads = actor_.zero_gradients();
  terms.critic_grads = critic_.zero_gradients();

  const double lo = 1.0 - hyper.clip;
  const double hi = 1.0 + hyper.clip;

  for (std::size_t i = 0; i < batch.size(); ++i) {
    const ExperienceRecord& rec = batch[i];
    const double adv = advantages[i];

    // Policy and entropy terms through the masked actor. Forced records have
    // a constant degenerate distribution: ratio 1, entropy 0, no gradient.
    if (rec.forced) {
      terms.loss += -adv;  // min(1*A, clip(1)*A) = A
    } else {
      if (!(rec.stored_prob > 0.0))
        throw std::runtime_error("surrogate_loss: corrupted buffer, stored probability <= 0");
      ForwardTape tape;
      const std::vector<double> probs = actor_.forward(rec.agent_obs, tape);
      const double ratio = probs[rec.agent_action] / rec.stored_prob;
      const double clipped = std::min(std::max(ratio, lo), hi);
      const double unclipped_obj = ratio * adv;
      const double clipped_obj = clipped * adv;

      std::vector<double> dloss_dprobs(probs.size(), 0.0);
      if (unclipped_obj <= clipped_obj) {
        terms.loss += -unclipped_obj;
        dloss_dprobs[rec.agent_action] += -adv / rec.stored_prob;
      } else {
        terms.loss += -clipped_obj;
        if (ratio > lo && ratio < hi)
          dloss_dprobs[rec.agent_action] += -adv / rec.stored_prob;
      }

      double entropy = 0.0;
      for (std::size_t a = 0; a < probs.size(); ++a) {
        if (probs[a] <= 0.0) continue;
        entropy -= probs[a] * std::log(probs[a]);
        dloss_dprobs[a] += hyper.entropy_coeff * (std::log(probs[a]) + 1.0);
      }
      terms.loss += -hyper.entropy_coeff * entropy;

      terms.actor_grads.add(actor_.backward(tape, dloss_dprobs));
    }

    // Value error against the fixed returns, through the current critic.
    ForwardTape vtape;
    const double value = critic_.forward(rec.global_state, vtape)[0];
    const double err = returns[i] - value;
    terms.loss += hyper.value_coeff * err * err;
    terms.critic_grads.add(critic_.backward(vtape, {-2.0 * hyper.value_coeff * err}));
  }

  const double inv = 1.0 / static_cast<double>(batch.size());
  terms.loss *= inv;
  terms.actor_grads.scale(inv);
  terms.critic_grads.scale(inv);
  return terms;
}

void PpoAgent::store(const ExperienceRecord& record, int capacity) {
  if (static_cast<int>(buffer_.size()) >= capacity)
    throw std::runtime_error("store: experience buffer already at capacity");
  buffer_.push_back(record);
}

void PpoAgent::update(const PpoHyper& hyper) {
  hyper.validate();
  if (static_cast<int>(buffer_.size()) != hyper.n_buffer)
    throw std::runtime_error("update: refusing to update from a partial buffer");

  std::vector<double> rewards(buffer_.size());
  for (std::size_t i = 0; i < buffer_.size(); ++i) rewards[i] = buffer_[i].reward;
  const std::vector<double> returns = compute_returns(rewards, hyper.discount);

  // Advantage snapshot against the pre-update critic.
  std::vector<double> advantages(buffer_.size());
  for (std::size_t i = 0; i < buffer_.size(); ++i)
    advantages[i] = compute_advantage(returns[i], critic_.forward(buffer_[i].global_state)[0]);

  if (hyper.normalize_advantage) {
    double mean = 0.0;
    for (double a : advantages) mean += a;
    mean /= static_cast<double>(advantages.size());
    double var = 0.0;
    for (double a : advantages) var += (a - mean) * (a - mean);
    var /= static_cast<double>(advantages.size());
    const double denom = std::sqrt(var) + 1e-8;
    for (double& a : advantages) a = (a - mean) / denom;
  }

  for (int it = 0; it < hyper.n_updates; ++it) {
    const SurrogateTerms terms = surrogate_loss(buffer_, returns, advantages, hyper);
    actor_.optimizer_step(terms.actor_grads, hyper.learning_rate);
    critic_.optimizer_step(terms.critic_grads, hyper.learning_rate);
  }
  buffer_.clear();
}

nlohmann::json PpoAgent::save_checkpoint() const {
  nlohmann::json doc;
  doc["schema_version"] = 1;
  doc["channel"] = channel_;
  doc["actor"] = actor_.save_weights();
  doc["critic"] = critic_.save_weights();
  return doc;
}

PpoAgent PpoAgent::load_checkpoint(const nlohmann::json& doc, const EnvConfig& env_cfg) {
  if (doc.at("schema_version").get<int>() != 1)
    throw std::runtime_error("load_checkpoint: unsupported schema version");
  PpoAgent agent;
  agent.channel_ = doc.at("channel").get<int>();
  agent.actor_ = DenseNet::load_weights(doc.at("actor"));
  agent.critic_ = DenseNet::load_weights(doc.at("critic"));
  agent.encoder_ = ObservationEncoder(env_cfg);
  if (agent.actor_.input_size() != agent.encoder_.observation_dim() ||
      agent.critic_.input_size() != agent.encoder_.global_dim())
    throw std::runtime_error("load_checkpoint: checkpoint does not match the scenario");
  return agent;
}

}  // namespace mcsched
