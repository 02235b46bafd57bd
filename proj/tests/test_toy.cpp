#include <doctest.h>

#include <chrono>
#include <cmath>
#include <cstring>
#include <numeric>

#include "sgp/io.hpp"
#include "sgp/toy.hpp"
#include "support.hpp"

using namespace sgp;

namespace {

// Plain REINFORCE with the group advantage as baseline-corrected return:
// grad = mean_groups mean_i A_i / |s_i| sum_t (onehot(s_t) - p_t).
std::vector<double> reinforce_gradient(const ToyPolicy& policy, const std::vector<RolloutGroup>& groups) {
  const int V = policy.vocab_size();
  std::vector<double> grad(policy.size(), 0.0);
  for (const auto& g : groups) {
    for (std::size_t i = 0; i < g.samples.size(); ++i) {
      const auto& s = g.samples[i];
      const double w = g.advantages[i] / s.token_ids.size() / g.samples.size() / groups.size();
      for (std::size_t t = 0; t < s.token_ids.size(); ++t) {
        // softmax recomputed here from the raw logits
        double z = 0;
        for (int v = 0; v < V; ++v) z += std::exp(policy.logit(int(t), v));
        for (int v = 0; v < V; ++v) {
          const double p = std::exp(policy.logit(int(t), v)) / z;
          grad[t * V + v] += w * ((v == s.token_ids[t] ? 1.0 : 0.0) - p);
        }
      }
    }
  }
  return grad;
}

ToyTrainConfig quick(int iters) {
  ToyTrainConfig cfg;
  cfg.iters = iters;
  return cfg;
}

}  // namespace

TEST_CASE("grammar shape") {
  const auto g = ToyGrammar::color_shape();
  CHECK(g.captions.size() == 32);
  CHECK(g.vocab.at(ToyGrammar::kEos).empty());
  CHECK(g.captions.front().find(' ') != std::string::npos);
}

TEST_CASE("softmax rows sum to one") {
  std::mt19937_64 rng(1);
  for (int k = 0; k < 50; ++k) {
    ToyPolicy p(1 + int(uniform_index(rng, 6)), 2 + int(uniform_index(rng, 12)));
    for (double& x : p.table()) x = (uniform01(rng) - 0.5) * 40;
    for (int t = 0; t < p.max_len(); ++t) {
      const auto row = p.probs(t);
      CHECK(std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0) < 1e-9);
      for (int v = 0; v < p.vocab_size(); ++v) CHECK(std::abs(std::exp(p.log_prob(t, v)) - row[v]) < 1e-12);
    }
  }
}

TEST_CASE("analytic gradient matches finite differences on 100 seeded instances") {
  double worst = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto inst = random_gradient_instance(seed);
    const auto check = policy_gradient_check(inst.policy, inst.groups, {});
    CAPTURE(seed);
    CHECK(check.max_rel_error < 1e-4);
    worst = std::max(worst, check.max_rel_error);
  }
  MESSAGE("worst relative error " << worst);
}

TEST_CASE("zero advantages give an exactly zero gradient") {
  auto inst = random_gradient_instance(42);
  for (auto& g : inst.groups) std::fill(g.advantages.begin(), g.advantages.end(), 0.0);
  for (double x : toy_gradient(inst.policy, inst.groups, {})) CHECK(x == 0.0);
}

TEST_CASE("with old == new the gradient is the REINFORCE gradient") {
  for (std::uint64_t seed = 100; seed < 130; ++seed) {
    auto inst = random_gradient_instance(seed);
    for (auto& g : inst.groups)
      for (auto& s : g.samples) s.logp_old = s.logp_new;
    const auto got = toy_gradient(inst.policy, inst.groups, {});
    const auto want = reinforce_gradient(inst.policy, inst.groups);
    REQUIRE(got.size() == want.size());
    for (std::size_t k = 0; k < got.size(); ++k) CHECK(std::abs(got[k] - want[k]) < 1e-12);
  }
}

TEST_CASE("seed 17 toy run improves reward and keeps format") {
  const auto grammar = ToyGrammar::color_shape();
  const auto start = std::chrono::steady_clock::now();
  const auto res = train_toy(grammar, quick(200), reference_toy_reward(32));
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  REQUIRE(res.trace.size() == 201);
  const auto& first = res.trace.front();
  const auto& last = res.trace.back();
  MESSAGE("reward " << first.mean_reward << " -> " << last.mean_reward << ", fmt " << last.fmt_rate);
  CHECK(last.mean_reward - first.mean_reward >= 0.15);
  CHECK(last.fmt_rate >= 0.99);
  CHECK(secs < 300);
  for (const auto& r : res.trace) {
    CHECK(r.entropy > 0.0);
    CHECK(r.fmt_rate >= 0.0);
    CHECK(r.fmt_rate <= 1.0);
  }
  for (std::size_t i = 0; i < res.trace.size(); ++i) CHECK(res.trace[i].iter == int(i));
}

TEST_CASE("toy run is bit-reproducible and independent of thread count") {
  const auto grammar = ToyGrammar::color_shape();
  auto cfg = quick(30);
  const auto a = train_toy(grammar, cfg, reference_toy_reward(32));
  const auto b = train_toy(grammar, cfg, reference_toy_reward(32));
  cfg.jobs = 1;
  const auto serial = train_toy(grammar, cfg, reference_toy_reward(32));
  CHECK(a.trace == b.trace);
  CHECK(a.policy == b.policy);
  CHECK(a.trace == serial.trace);
  CHECK(a.policy == serial.policy);

  cfg.seed = 18;
  CHECK_FALSE(train_toy(grammar, cfg, reference_toy_reward(32)).trace == a.trace);
}

TEST_CASE("constant reward leaves the policy unchanged") {
  const auto grammar = ToyGrammar::color_shape();
  const auto cfg = quick(10);
  const auto res = train_toy(grammar, cfg, [](const std::string&, const std::string&) { return ToyScore{0.5, 1, false}; });
  CHECK(res.policy == ToyPolicy::with_format_prior(grammar, cfg.format_prior));
}

TEST_CASE("errored rollouts never move the policy") {
  const auto grammar = ToyGrammar::color_shape();
  const auto cfg = quick(5);
  const auto res = train_toy(grammar, cfg, [](const std::string&, const std::string&) { return ToyScore{0, 0, true}; });
  CHECK(res.policy == ToyPolicy::with_format_prior(grammar, cfg.format_prior));
}

TEST_CASE("format prior") {
  const auto g = ToyGrammar::color_shape();
  const auto p = ToyPolicy::with_format_prior(g, 0.75);
  const auto row = p.probs(0);
  CHECK(std::abs(row.at(g.prior_classes[0][0]) - 0.75) < 1e-12);
  CHECK_THROWS_AS(ToyPolicy::with_format_prior(g, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(ToyPolicy::with_format_prior(g, 0.0), std::invalid_argument);
}

TEST_CASE("policy snapshot layout and round trip") {
  ToyPolicy p(3, 4);
  for (std::size_t k = 0; k < p.size(); ++k) p.table()[k] = 0.5 * k - 1.25;
  const auto bytes = serialize_policy(p);
  REQUIRE(bytes.size() == 16 + 16 + 12 * 8);
  const char magic[16] = {'S', 'G', 'P', 'T', 'O', 'Y', 'P', 'O', 'L', 'I', 'C', 'Y', 0, 0, 0, 0};
  CHECK(std::memcmp(bytes.data(), magic, 16) == 0);
  // version 1, rows 3, cols 4, reserved 0, little-endian
  const std::uint8_t header[16] = {1, 0, 0, 0, 3, 0, 0, 0, 4, 0, 0, 0, 0, 0, 0, 0};
  CHECK(std::memcmp(bytes.data() + 16, header, 16) == 0);
  // -1.25 = 0xBFF4000000000000
  const std::uint8_t first[8] = {0, 0, 0, 0, 0, 0, 0xF4, 0xBF};
  CHECK(std::memcmp(bytes.data() + 32, first, 8) == 0);
  CHECK(deserialize_policy(bytes) == p);

  test::TempDir dir;
  save_policy(dir.path() / "p.bin", p);
  CHECK(load_policy(dir.path() / "p.bin") == p);

  auto bad = bytes;
  bad[0] = 'X';
  CHECK_THROWS(deserialize_policy(bad));
  bad = bytes;
  bad[16] = 2;
  CHECK_THROWS(deserialize_policy(bad));
  bad = bytes;
  bad.pop_back();
  CHECK_THROWS(deserialize_policy(bad));
}
