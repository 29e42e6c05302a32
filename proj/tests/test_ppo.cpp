#include <doctest.h>

#include <cmath>

#include "mcsched/env.hpp"
#include "mcsched/ppo.hpp"

using namespace mcsched;

namespace {

EnvConfig tiny_env(int n = 2, int m = 1) {
  EnvConfig cfg;
  cfg.n_messages = n;
  cfg.n_channels = m;
  cfg.buffer_len = 4;
  cfg.arrival_rates.assign(n, 2.0);
  cfg.duration_table = Grid<int>(n, m, 1);
  cfg.energy_const = Grid<double>(n, m, 500.0);
  cfg.tradeoff_v = 1.0;
  cfg.penalty_fn = Grid<double>(n, 4, 1.0);
  cfg.gain_support = {100, 105, 110};
  cfg.seed = 3;
  return cfg;
}

PpoAgent make_agent(const EnvConfig& cfg, std::uint64_t seed = 17) {
  RngStream rng(seed);
  return PpoAgent(0, cfg, {6, 6}, {6, 6}, Activation::kTanh, rng);
}

AgentObservation random_observation(const EnvConfig& cfg, RngStream& rng, int avail = 0) {
  AgentObservation obs;
  obs.request_matrix = Grid<int>(cfg.n_messages, cfg.buffer_len);
  for (int n = 0; n < cfg.n_messages; ++n)
    for (int tau = 0; tau < cfg.buffer_len; ++tau)
      obs.request_matrix(n, tau) = static_cast<int>(rng.uniform_index(5));
  obs.own_avail = avail;
  obs.own_gains.assign(cfg.n_messages, 0.0);
  for (double& g : obs.own_gains) g = rng.pick(cfg.gain_support);
  return obs;
}

std::vector<ExperienceRecord> random_batch(const EnvConfig& cfg, const PpoAgent& agent, int size,
                                           RngStream& rng, bool with_forced = true) {
  std::vector<ExperienceRecord> batch;
  for (int i = 0; i < size; ++i) {
    const AgentObservation obs = random_observation(cfg, rng, with_forced && i % 3 == 2 ? 1 : 0);
    const CategoricalPolicy policy = agent.act_distribution(obs);
    const int action = policy.sample(rng);
    ExperienceRecord rec;
    EnvState state = init_state(cfg);
    state.request_matrix = obs.request_matrix;
    rec.global_state = agent.encoder().encode_global(state);
    rec.agent_obs = agent.encoder().encode_observation(obs);
    rec.agent_action = action;
    rec.reward = -static_cast<double>(rng.uniform_index(10));
    rec.stored_prob = policy.probs[action];
    rec.forced = obs.own_avail > 0;
    batch.push_back(rec);
  }
  return batch;
}

}  // namespace

TEST_CASE("masking forces the idle action on busy channels") {
  const EnvConfig cfg = tiny_env();
  const PpoAgent agent = make_agent(cfg);
  RngStream rng(5);

  const AgentObservation busy = random_observation(cfg, rng, 3);
  const CategoricalPolicy masked = agent.act_distribution(busy);
  CHECK(masked.probs[0] == 1.0);
  for (std::size_t a = 1; a < masked.probs.size(); ++a) CHECK(masked.probs[a] == 0.0);

  const AgentObservation free_ch = random_observation(cfg, rng, 0);
  const CategoricalPolicy open = agent.act_distribution(free_ch);
  double sum = 0.0;
  for (double p : open.probs) {
    CHECK(p > 0.0);
    sum += p;
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);
}

TEST_CASE("zeroed actor weights give the uniform distribution") {
  const EnvConfig cfg = tiny_env();
  PpoAgent agent = make_agent(cfg);
  nlohmann::json doc = agent.save_checkpoint();
  for (auto& layer : doc["actor"]["layers"]) {
    for (auto& w : layer["weights"]) w = 0.0;
    for (auto& b : layer["bias"]) b = 0.0;
  }
  const PpoAgent zeroed = PpoAgent::load_checkpoint(doc, cfg);
  RngStream rng(6);
  const CategoricalPolicy p = zeroed.act_distribution(random_observation(cfg, rng));
  for (double v : p.probs) CHECK(v == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("discounted returns truncate at the buffer end") {
  const std::vector<double> r = compute_returns({1.0, 1.0, 1.0}, 0.9);
  CHECK(r[0] == doctest::Approx(2.71).epsilon(1e-12));
  CHECK(r[1] == doctest::Approx(1.9).epsilon(1e-12));
  CHECK(r[2] == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<double> zeros = compute_returns({0, 0, 0, 0}, 0.9);
  for (double v : zeros) CHECK(v == 0.0);

  const std::vector<double> nodisc = compute_returns({3, -2, 5}, 0.0);
  CHECK(nodisc == std::vector<double>{3, -2, 5});

  CHECK_THROWS_AS(compute_returns({}, 0.9), std::invalid_argument);
}

TEST_CASE("advantage is return minus critic value") {
  CHECK(compute_advantage(2.71, 2.71) == 0.0);
  CHECK(compute_advantage(1.0, 0.0) == 1.0);
  const std::vector<double> rets = {1.0, 2.0, 3.0};
  const std::vector<double> vals = {0.5, 2.5, -1.0};
  for (std::size_t i = 0; i < rets.size(); ++i)
    CHECK(compute_advantage(rets[i], vals[i]) == rets[i] - vals[i]);
}

TEST_CASE("probability ratios") {
  const EnvConfig cfg = tiny_env();
  const PpoAgent agent = make_agent(cfg);
  RngStream rng(7);

  ExperienceRecord forced;
  forced.forced = true;
  forced.stored_prob = 1.0;
  CHECK(agent.compute_ratio(forced) == 1.0);

  const AgentObservation obs = random_observation(cfg, rng);
  const CategoricalPolicy policy = agent.act_distribution(obs);
  ExperienceRecord rec;
  rec.agent_obs = agent.encoder().encode_observation(obs);
  rec.agent_action = 1;
  rec.stored_prob = policy.probs[1];
  CHECK(agent.compute_ratio(rec) == 1.0);  // fresh record, exact unity

  rec.stored_prob = 2.0 * policy.probs[1];
  CHECK(agent.compute_ratio(rec) == doctest::Approx(0.5).epsilon(1e-12));

  rec.stored_prob = 0.0;
  CHECK_THROWS_AS(agent.compute_ratio(rec), std::runtime_error);
}

TEST_CASE("clip arithmetic in the surrogate") {
  // R = 1.5, eps = 0.2, A = 1: the clipped branch uses 1.2 and wins the min.
  const double ratio = 1.5, eps = 0.2, adv = 1.0;
  const double clipped = std::min(std::max(ratio, 1.0 - eps), 1.0 + eps);
  CHECK(clipped == doctest::Approx(1.2));
  CHECK(std::min(ratio * adv, clipped * adv) == doctest::Approx(1.2));
}

TEST_CASE("entropy of the uniform distribution") {
  CategoricalPolicy uniform;
  uniform.probs.assign(3, 1.0 / 3);
  CHECK(std::abs(uniform.entropy() - std::log(3.0)) < 1e-12);
}

TEST_CASE("zero advantages reduce the loss to weighted value error") {
  const EnvConfig cfg = tiny_env();
  const PpoAgent agent = make_agent(cfg);
  RngStream rng(8);
  const std::vector<ExperienceRecord> batch = random_batch(cfg, agent, 6, rng, false);

  PpoHyper hyper;
  hyper.entropy_coeff = 0.0;
  hyper.value_coeff = 0.7;
  std::vector<double> returns(batch.size()), advantages(batch.size(), 0.0);
  for (std::size_t i = 0; i < batch.size(); ++i) returns[i] = batch[i].reward;

  const SurrogateTerms terms = agent.surrogate_loss(batch, returns, advantages, hyper);
  double expect = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const double v = agent.critic().forward(batch[i].global_state)[0];
    expect += hyper.value_coeff * (returns[i] - v) * (returns[i] - v);
  }
  expect /= batch.size();
  CHECK(terms.loss == doctest::Approx(expect).epsilon(1e-12));
  for (const auto& layer : terms.actor_grads.weights)
    for (double g : layer) CHECK(g == 0.0);
}

TEST_CASE("surrogate gradients match central differences on 6-record batches") {
  const EnvConfig cfg = tiny_env();
  RngStream rng(9);
  PpoHyper hyper;
  hyper.clip = 0.2;
  hyper.value_coeff = 0.5;
  hyper.entropy_coeff = 0.01;

  double worst = 0.0;
  for (int trial = 0; trial < 12; ++trial) {
    PpoAgent agent = make_agent(cfg, 100 + trial);
    std::vector<ExperienceRecord> batch = random_batch(cfg, agent, 6, rng);
    // move ratios off 1 so both clip branches appear
    for (ExperienceRecord& rec : batch)
      if (!rec.forced) rec.stored_prob *= 0.6 + 0.8 * rng.uniform01();

    std::vector<double> returns(batch.size()), advantages(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      returns[i] = batch[i].reward;
      advantages[i] = 2.0 * rng.uniform01() - 1.0;
    }

    const SurrogateTerms terms = agent.surrogate_loss(batch, returns, advantages, hyper);

    nlohmann::json doc = agent.save_checkpoint();
    const double h = 1e-6;
    // central differences carry roundoff of order eps*|loss|/h; differences
    // inside that band are not evidence against the analytic gradient
    const double fd_noise = 100.0 * 1e-16 * std::max(1.0, std::abs(terms.loss)) / h;
    const auto loss_at = [&](const nlohmann::json& d) {
      const PpoAgent probe = PpoAgent::load_checkpoint(d, cfg);
      return probe.surrogate_loss(batch, returns, advantages, hyper).loss;
    };
    const auto check_block = [&](const char* net, const GradientSet& grads) {
      for (std::size_t l = 0; l < grads.weights.size(); ++l) {
        for (std::size_t i = 0; i < grads.weights[l].size(); ++i) {
          nlohmann::json bumped = doc;
          const double v = bumped[net]["layers"][l]["weights"][i].get<double>();
          bumped[net]["layers"][l]["weights"][i] = v + h;
          const double up = loss_at(bumped);
          bumped[net]["layers"][l]["weights"][i] = v - h;
          const double down = loss_at(bumped);
          const double numeric = (up - down) / (2.0 * h);
          const double analytic = grads.weights[l][i];
          if (std::abs(numeric - analytic) <= fd_noise) continue;
          const double mag = std::max(std::abs(numeric), std::abs(analytic));
          worst = std::max(worst, std::abs(numeric - analytic) / mag);
        }
      }
    };
    check_block("actor", terms.actor_grads);
    check_block("critic", terms.critic_grads);
  }
  CHECK(worst < 1e-5);
}

TEST_CASE("pessimism of the clipped objective") {
  RngStream rng(11);
  for (int i = 0; i < 2000; ++i) {
    const double ratio = 0.2 + 2.5 * rng.uniform01();
    const double adv = 4.0 * rng.uniform01() - 2.0;
    const double eps = 0.2;
    const double clipped = std::min(std::max(ratio, 1.0 - eps), 1.0 + eps);
    const double objective = std::min(ratio * adv, clipped * adv);
    CHECK(objective <= ratio * adv + 1e-12);
    if (adv > 0.0 && ratio > 1.0 + eps) CHECK(objective == doctest::Approx((1.0 + eps) * adv));
  }
}

TEST_CASE("update refuses a partial buffer, runs, then empties it") {
  const EnvConfig cfg = tiny_env();
  PpoAgent agent = make_agent(cfg);
  RngStream rng(12);
  PpoHyper hyper;
  hyper.n_buffer = 8;
  hyper.n_updates = 2;

  for (const ExperienceRecord& rec : random_batch(cfg, agent, 4, rng))
    agent.store(rec, hyper.n_buffer);
  CHECK_THROWS_AS(agent.update(hyper), std::runtime_error);

  for (const ExperienceRecord& rec : random_batch(cfg, agent, 4, rng))
    agent.store(rec, hyper.n_buffer);
  agent.update(hyper);
  CHECK(agent.buffer().empty());

  for (const ExperienceRecord& rec : random_batch(cfg, agent, 8, rng))
    agent.store(rec, hyper.n_buffer);
  CHECK_THROWS_AS(agent.store(random_batch(cfg, agent, 1, rng)[0], hyper.n_buffer),
                  std::runtime_error);
}

TEST_CASE("zero update iterations leave the parameters untouched") {
  const EnvConfig cfg = tiny_env();
  PpoAgent agent = make_agent(cfg);
  RngStream rng(13);
  PpoHyper hyper;
  hyper.n_buffer = 6;
  hyper.n_updates = 0;
  const nlohmann::json before = agent.save_checkpoint();
  for (const ExperienceRecord& rec : random_batch(cfg, agent, 6, rng))
    agent.store(rec, hyper.n_buffer);
  agent.update(hyper);
  const nlohmann::json after = agent.save_checkpoint();
  CHECK(before.at("actor").at("layers") == after.at("actor").at("layers"));
  CHECK(before.at("critic").at("layers") == after.at("critic").at("layers"));
  CHECK(agent.buffer().empty());
}

TEST_CASE("entropy-only updates push the actor toward uniform") {
  const EnvConfig cfg = tiny_env();
  RngStream init_rng(14);
  PpoAgent agent(0, cfg, {6, 6}, {6, 6}, Activation::kTanh, init_rng);
  // zero the critic so advantages vanish under zero rewards, and skew the
  // actor's output bias so the starting distribution is far from uniform
  {
    nlohmann::json doc = agent.save_checkpoint();
    for (auto& layer : doc["critic"]["layers"]) {
      for (auto& w : layer["weights"]) w = 0.0;
      for (auto& b : layer["bias"]) b = 0.0;
    }
    auto& out_bias = doc["actor"]["layers"][doc["actor"]["layers"].size() - 1]["bias"];
    out_bias[0] = 2.0;
    out_bias[1] = 0.0;
    out_bias[2] = -1.5;
    agent = PpoAgent::load_checkpoint(doc, cfg);
  }

  PpoHyper hyper;
  hyper.n_buffer = 4;
  hyper.n_updates = 10;
  hyper.value_coeff = 0.0;
  hyper.entropy_coeff = 0.05;
  hyper.learning_rate = 0.01;
  hyper.normalize_advantage = false;

  RngStream rng(15);
  const AgentObservation obs = random_observation(cfg, rng);
  double last_entropy = agent.act_distribution(obs).entropy();
  CHECK(last_entropy < std::log(3.0) - 0.2);  // decidedly non-uniform start
  for (int round = 0; round < 50; ++round) {
    for (int i = 0; i < hyper.n_buffer; ++i) {
      const CategoricalPolicy policy = agent.act_distribution(obs);
      const int action = policy.sample(rng);
      ExperienceRecord rec;
      EnvState state = init_state(cfg);
      state.request_matrix = obs.request_matrix;
      rec.global_state = agent.encoder().encode_global(state);
      rec.agent_obs = agent.encoder().encode_observation(obs);
      rec.agent_action = action;
      rec.reward = 0.0;
      rec.stored_prob = policy.probs[action];
      agent.store(rec, hyper.n_buffer);
    }
    agent.update(hyper);
    const double entropy = agent.act_distribution(obs).entropy();
    // strict climb until within optimizer-oscillation range of the ceiling
    if (last_entropy < std::log(3.0) - 0.01)
      CHECK(entropy > last_entropy);
    else
      CHECK(entropy > std::log(3.0) - 0.01);
    last_entropy = entropy;
  }
  CHECK(last_entropy <= std::log(3.0) + 1e-12);
  CHECK(last_entropy > std::log(3.0) - 0.05);
}
