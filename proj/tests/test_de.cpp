#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "mcsched/de.hpp"

using namespace mcsched;

namespace {

using Joint = std::vector<int>;

// Exact joint-action law by enumerating every agent order and sample
// sequence, written directly from the sequential-sampling protocol and
// independent of the resolver implementation.
void enumerate_branch(const std::vector<std::vector<double>>& working,
                      const std::vector<int>& order, std::size_t round, Joint& joint,
                      double prob, std::map<Joint, double>& law) {
  if (round == order.size()) {
    law[joint] += prob;
    return;
  }
  const int agent = order[round];
  const std::vector<double>& dist = working[agent];
  for (int a = 0; a < static_cast<int>(dist.size()); ++a) {
    if (dist[a] <= 0.0) continue;
    Joint next_joint = joint;
    next_joint[agent] = a;
    std::vector<std::vector<double>> next = working;
    if (a != 0) {
      for (std::size_t r = round + 1; r < order.size(); ++r) {
        std::vector<double>& d = next[order[r]];
        d[a] = 0.0;
        double sum = 0.0;
        for (double v : d) sum += v;
        if (sum <= 0.0) {
          std::fill(d.begin(), d.end(), 0.0);
          d[0] = 1.0;
        } else {
          for (double& v : d) v /= sum;
        }
      }
    }
    enumerate_branch(next, order, round + 1, next_joint, prob * dist[a], law);
  }
}

std::map<Joint, double> exact_joint_law(const std::vector<std::vector<double>>& policies) {
  const int m = static_cast<int>(policies.size());
  std::vector<int> order(m);
  for (int i = 0; i < m; ++i) order[i] = i;
  long n_orders = 1;
  for (int i = 2; i <= m; ++i) n_orders *= i;

  std::map<Joint, double> law;
  do {
    Joint joint(m, 0);
    enumerate_branch(policies, order, 0, joint, 1.0 / n_orders, law);
  } while (std::next_permutation(order.begin(), order.end()));
  return law;
}

std::vector<CategoricalPolicy> wrap(const std::vector<std::vector<double>>& raw) {
  std::vector<CategoricalPolicy> out;
  for (const auto& p : raw) out.push_back(CategoricalPolicy{p});
  return out;
}

double total_variation(const std::map<Joint, double>& a, const std::map<Joint, double>& b) {
  double tv = 0.0;
  for (const auto& [k, v] : a) {
    auto it = b.find(k);
    tv += std::abs(v - (it == b.end() ? 0.0 : it->second));
  }
  for (const auto& [k, v] : b)
    if (a.find(k) == a.end()) tv += v;
  return 0.5 * tv;
}

}  // namespace

TEST_CASE("random order is a uniform permutation") {
  RngStream rng(31);
  CHECK(de::random_order(1, rng) == std::vector<int>{0});

  std::map<std::vector<int>, long> counts;
  const long draws = 60000;
  for (long i = 0; i < draws; ++i) counts[de::random_order(3, rng)]++;
  CHECK(counts.size() == 6);
  for (const auto& [perm, count] : counts) {
    // each permutation within 3 sigma of draws/6
    const double expect = draws / 6.0;
    const double sigma = std::sqrt(draws * (1.0 / 6.0) * (5.0 / 6.0));
    CHECK(std::abs(count - expect) < 3.0 * sigma);
    // bijection
    std::vector<int> sorted = perm;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{0, 1, 2});
  }
}

TEST_CASE("distribution modification") {
  const std::vector<CategoricalPolicy> base = wrap({{0.2, 0.3, 0.5}, {0.1, 0.6, 0.3}});

  SUBCASE("idle pick leaves policies untouched") {
    const auto out = de::modify(base, 0);
    for (std::size_t i = 0; i < base.size(); ++i) CHECK(out[i].probs == base[i].probs);
  }
  SUBCASE("zero and renormalize") {
    const auto out = de::modify(wrap({{0.2, 0.3, 0.5}}), 2);
    CHECK(out[0].probs[0] == doctest::Approx(0.4));
    CHECK(out[0].probs[1] == doctest::Approx(0.6));
    CHECK(out[0].probs[2] == 0.0);
  }
  SUBCASE("exhausted support collapses to idle") {
    const auto out = de::modify(wrap({{0.0, 0.0, 1.0}}), 2);
    CHECK(out[0].probs == std::vector<double>{1.0, 0.0, 0.0});
  }
}

TEST_CASE("single agent resolve is a plain categorical sample") {
  RngStream order_rng(1), sample_rng(2);
  const std::vector<CategoricalPolicy> policy = wrap({{0.25, 0.5, 0.25}});
  std::map<int, long> counts;
  const long draws = 100000;
  for (long i = 0; i < draws; ++i) {
    const ResolvedAction r = de::resolve(policy, order_rng, sample_rng);
    counts[r.joint.choices[0]]++;
    CHECK(r.stored_probs[0] == policy[0].probs[r.joint.choices[0]]);
  }
  double tv = 0.0;
  for (int a = 0; a < 3; ++a)
    tv += std::abs(counts[a] / static_cast<double>(draws) - policy[0].probs[a]);
  CHECK(0.5 * tv < 0.01);
}

TEST_CASE("two uniform message policies split the assignments evenly") {
  RngStream order_rng(3), sample_rng(4);
  const std::vector<CategoricalPolicy> policies = wrap({{0.0, 0.5, 0.5}, {0.0, 0.5, 0.5}});
  std::map<Joint, long> counts;
  const long draws = 100000;
  for (long i = 0; i < draws; ++i)
    counts[de::resolve(policies, order_rng, sample_rng).joint.choices]++;
  REQUIRE(counts.size() == 2);
  const double p12 = counts[{1, 2}] / static_cast<double>(draws);
  const double p21 = counts[{2, 1}] / static_cast<double>(draws);
  CHECK(std::abs(p12 - 0.5) < 0.01);
  CHECK(std::abs(p21 - 0.5) < 0.01);
}

TEST_CASE("idle first pick leaves the second agent's distribution unmodified") {
  // With the first agent certain to idle, the joint law factorizes.
  RngStream order_rng(5), sample_rng(6);
  const std::vector<double> second = {0.2, 0.5, 0.3};
  const std::vector<CategoricalPolicy> policies = wrap({{1.0, 0.0, 0.0}, second});
  std::map<int, long> counts;
  const long draws = 100000;
  for (long i = 0; i < draws; ++i) {
    const ResolvedAction r = de::resolve(policies, order_rng, sample_rng);
    CHECK(r.joint.choices[0] == 0);
    counts[r.joint.choices[1]]++;
  }
  for (int a = 0; a < 3; ++a)
    CHECK(std::abs(counts[a] / static_cast<double>(draws) - second[a]) < 0.01);
}

TEST_CASE("joint law matches exhaustive enumeration for all shapes up to 3x3") {
  RngStream order_rng(7), sample_rng(8);
  // rational test policies over N+1 actions
  const auto make_policies = [](int m, int n) {
    std::vector<std::vector<double>> out;
    for (int i = 0; i < m; ++i) {
      std::vector<double> p(n + 1);
      double sum = 0.0;
      for (int a = 0; a <= n; ++a) {
        p[a] = 1.0 + ((i + 1) * (a + 2)) % 5;
        sum += p[a];
      }
      for (double& v : p) v /= sum;
      out.push_back(p);
    }
    return out;
  };

  for (int m = 1; m <= 3; ++m) {
    for (int n = 1; n <= 3; ++n) {
      const auto raw = make_policies(m, n);
      const std::map<Joint, double> want = exact_joint_law(raw);
      std::map<Joint, double> got;
      const long draws = 100000;
      const std::vector<CategoricalPolicy> policies = wrap(raw);
      for (long i = 0; i < draws; ++i)
        got[de::resolve(policies, order_rng, sample_rng).joint.choices] += 1.0 / draws;
      CHECK_MESSAGE(total_variation(want, got) < 0.02, "m=", m, " n=", n);
    }
  }
}

TEST_CASE("no duplicate starts and positive stored probabilities over 100k resolves") {
  RngStream order_rng(9), sample_rng(10), gen_rng(11);
  const int m = 4, n = 3;
  long violations = 0;
  for (long trial = 0; trial < 100000; ++trial) {
    std::vector<CategoricalPolicy> policies;
    for (int i = 0; i < m; ++i) {
      std::vector<double> p(n + 1);
      double sum = 0.0;
      for (double& v : p) {
        v = gen_rng.uniform01() + 1e-3;
        sum += v;
      }
      for (double& v : p) v /= sum;
      policies.push_back(CategoricalPolicy{p});
    }
    const ResolvedAction r = de::resolve(policies, order_rng, sample_rng);
    for (int a = 0; a < m; ++a) {
      if (!(r.stored_probs[a] > 0.0)) ++violations;
      if (policies[a].probs[r.joint.choices[a]] <= 0.0) ++violations;
      for (int b = a + 1; b < m; ++b)
        if (r.joint.choices[a] != 0 && r.joint.choices[a] == r.joint.choices[b]) ++violations;
    }
  }
  CHECK(violations == 0);
}

TEST_CASE("all-idle degenerate policies resolve to the all-zero action") {
  RngStream order_rng(12), sample_rng(13);
  const std::vector<CategoricalPolicy> policies =
      wrap({{1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}, {1.0, 0.0, 0.0}});
  for (int i = 0; i < 1000; ++i) {
    const ResolvedAction r = de::resolve(policies, order_rng, sample_rng);
    CHECK(r.joint.choices == std::vector<int>{0, 0, 0});
    CHECK(r.stored_probs == std::vector<double>{1.0, 1.0, 1.0});
  }
}

TEST_CASE("invalid distributions are rejected") {
  RngStream order_rng(14), sample_rng(15);
  CHECK_THROWS_AS(de::resolve(wrap({{0.5, 0.2, 0.2}}), order_rng, sample_rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(de::resolve(wrap({{1.2, -0.2, 0.0}}), order_rng, sample_rng),
                  std::invalid_argument);
  CHECK_THROWS_AS(de::resolve({}, order_rng, sample_rng), std::invalid_argument);
  CHECK_THROWS_AS(de::resolve(wrap({{0.5, 0.5}, {0.3, 0.3, 0.4}}), order_rng, sample_rng),
                  std::invalid_argument);
}
