#include "sgp/toy.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include <omp.h>

#include "sgp/io.hpp"
#include "sgp/reward.hpp"
#include "sgp/parallel_for.hpp"

namespace sgp {

ToyGrammar ToyGrammar::color_shape() {
  ToyGrammar g;
  g.vocab = {"",
             "<THINK>draw</THINK><ANSWER><svg viewBox=\"0 0 32 32\">",
             "</svg></ANSWER>",
             "<text x=\"4\" y=\"16\">label</text>"};
  const char* colors[] = {"red", "green", "blue", "yellow", "purple", "orange", "pink", "brown"};
  struct Shape {
    const char* name;
    const char* markup;
  };
  const Shape shapes[] = {
      {"circle", "<circle cx=\"16\" cy=\"16\" r=\"12\"/>"},
      {"square", "<rect x=\"4\" y=\"4\" width=\"24\" height=\"24\"/>"},
      {"triangle", "<polygon points=\"16,3 29,29 3,29\"/>"},
      {"ellipse", "<ellipse cx=\"16\" cy=\"16\" rx=\"14\" ry=\"8\"/>"},
  };
  std::vector<int> color_ids, shape_ids;
  for (const char* c : colors) {
    color_ids.push_back(static_cast<int>(g.vocab.size()));
    g.vocab.push_back(std::string("<g fill=\"") + c + "\">");
  }
  for (const Shape& s : shapes) {
    shape_ids.push_back(static_cast<int>(g.vocab.size()));
    g.vocab.push_back(std::string(s.markup) + "</g>");
  }
  for (const char* c : colors)
    for (const Shape& s : shapes) g.captions.push_back(std::string(c) + " " + s.name);
  g.max_len = 6;
  g.prior_classes = {{1}, color_ids, shape_ids, {2}, {kEos}, {kEos}};
  return g;
}

std::string ToyGrammar::detokenize(std::span<const int> tokens) const {
  std::string out;
  for (int t : tokens) out += vocab.at(static_cast<std::size_t>(t));
  return out;
}

ToyPolicy::ToyPolicy(int max_len, int vocab_size)
    : max_len_(max_len), vocab_size_(vocab_size),
      logits_(static_cast<std::size_t>(max_len) * vocab_size, 0.0) {
  if (max_len < 1 || vocab_size < 2) throw std::invalid_argument("toy policy needs max_len >= 1, vocab >= 2");
}

std::vector<double> ToyPolicy::probs(int t) const {
  const double* row = logits_.data() + index(t, 0);
  const double mx = *std::max_element(row, row + vocab_size_);
  std::vector<double> p(vocab_size_);
  double z = 0.0;
  for (int v = 0; v < vocab_size_; ++v) z += p[v] = std::exp(row[v] - mx);
  for (double& x : p) x /= z;
  return p;
}

double ToyPolicy::log_prob(int t, int v) const {
  const double* row = logits_.data() + index(t, 0);
  const double mx = *std::max_element(row, row + vocab_size_);
  double z = 0.0;
  for (int u = 0; u < vocab_size_; ++u) z += std::exp(row[u] - mx);
  return row[v] - mx - std::log(z);
}

double ToyPolicy::entropy() const {
  double total = 0.0;
  for (int t = 0; t < max_len_; ++t) {
    for (double p : probs(t))
      if (p > 0) total -= p * std::log(p);
  }
  return total / max_len_;
}

std::vector<int> ToyPolicy::sample(std::mt19937_64& rng, int eos) const {
  std::vector<int> tokens;
  for (int t = 0; t < max_len_; ++t) {
    std::vector<double> p = probs(t);
    const double u = uniform01(rng);
    double acc = 0.0;
    int pick = vocab_size_ - 1;
    for (int v = 0; v < vocab_size_; ++v) {
      acc += p[v];
      if (u < acc) {
        pick = v;
        break;
      }
    }
    tokens.push_back(pick);
    if (pick == eos) break;
  }
  return tokens;
}

ToyPolicy ToyPolicy::with_format_prior(const ToyGrammar& grammar, double class_mass) {
  if (!(class_mass > 0 && class_mass < 1)) throw std::invalid_argument("format prior must lie in (0, 1)");
  const int vocab = static_cast<int>(grammar.vocab.size());
  ToyPolicy policy(grammar.max_len, vocab);
  for (int t = 0; t < grammar.max_len; ++t) {
    std::vector<bool> in_class(vocab, false);
    if (t < static_cast<int>(grammar.prior_classes.size()))
      for (int v : grammar.prior_classes[t]) in_class.at(v) = true;
    const int k = static_cast<int>(std::count(in_class.begin(), in_class.end(), true));
    for (int v = 0; v < vocab; ++v) {
      double p = 1.0 / vocab;
      if (k > 0 && k < vocab) p = in_class[v] ? class_mass / k : (1.0 - class_mass) / (vocab - k);
      policy.logit(t, v) = std::log(p);
    }
  }
  return policy;
}

void refresh_logp_new(const ToyPolicy& policy, std::span<RolloutGroup> groups) {
  for (RolloutGroup& g : groups)
    for (RolloutSample& s : g.samples) {
      s.logp_new.resize(s.token_ids.size());
      for (std::size_t t = 0; t < s.token_ids.size(); ++t)
        s.logp_new[t] = policy.log_prob(static_cast<int>(t), s.token_ids[t]);
    }
}

double toy_objective(const ToyPolicy& policy, std::span<const RolloutGroup> groups, const ClipConfig& clip) {
  if (groups.empty()) return 0.0;
  std::vector<RolloutGroup> copy(groups.begin(), groups.end());
  refresh_logp_new(policy, copy);
  double total = 0.0;
  for (const RolloutGroup& g : copy) total += grpo_objective(g, clip);
  return total / static_cast<double>(copy.size());
}

std::vector<double> toy_gradient(const ToyPolicy& policy, std::span<const RolloutGroup> groups,
                                 const ClipConfig& clip) {
  std::vector<double> grad(policy.size(), 0.0);
  if (groups.empty()) return grad;
  const int vocab = policy.vocab_size();
  std::vector<std::vector<double>> rows(policy.max_len());
  for (int t = 0; t < policy.max_len(); ++t) rows[t] = policy.probs(t);

  const double group_weight = 1.0 / static_cast<double>(groups.size());
  for (const RolloutGroup& g : groups) {
    if (g.samples.size() != g.advantages.size()) throw std::invalid_argument("group is not prepared");
    if (g.samples.empty()) continue;
    const double sample_weight = group_weight / static_cast<double>(g.samples.size());
    for (std::size_t i = 0; i < g.samples.size(); ++i) {
      const RolloutSample& s = g.samples[i];
      const double adv = g.advantages[i];
      if (adv == 0.0) continue;
      const double token_weight = sample_weight / static_cast<double>(s.token_ids.size());
      for (std::size_t t = 0; t < s.token_ids.size(); ++t) {
        const int tok = s.token_ids[t];
        const double ratio = std::exp(policy.log_prob(static_cast<int>(t), tok) - s.logp_old[t]);
        const double scale = token_weight * surrogate_derivative(ratio, adv, clip) * ratio;
        if (scale == 0.0) continue;
        double* out = grad.data() + t * static_cast<std::size_t>(vocab);
        for (int v = 0; v < vocab; ++v) out[v] += scale * ((v == tok ? 1.0 : 0.0) - rows[t][v]);
      }
    }
  }
  return grad;
}

GradientCheck policy_gradient_check(const ToyPolicy& policy, std::span<const RolloutGroup> groups,
                                    const ClipConfig& clip, double h) {
  GradientCheck out;
  const std::vector<double> analytic = toy_gradient(policy, groups, clip);
  ToyPolicy probe = policy;
  for (std::size_t k = 0; k < policy.size(); ++k) {
    const double x = policy.table()[k];
    probe.table()[k] = x + h;
    const double up = toy_objective(probe, groups, clip);
    probe.table()[k] = x - h;
    const double down = toy_objective(probe, groups, clip);
    probe.table()[k] = x;
    const double numeric = (up - down) / (2 * h);
    const double denom = std::max({std::abs(analytic[k]), std::abs(numeric), 1e-6});
    out.max_rel_error = std::max(out.max_rel_error, std::abs(analytic[k] - numeric) / denom);
    out.max_abs_gradient = std::max(out.max_abs_gradient, std::abs(analytic[k]));
  }
  return out;
}

GradientInstance random_gradient_instance(std::uint64_t seed) {
  std::mt19937_64 rng = stream_rng(seed, 0x6772616463686bULL);
  auto pick = [&](int lo, int hi) { return lo + static_cast<int>(uniform01(rng) * (hi - lo + 1)); };
  auto normal = [&] {
    // Box-Muller on the portable uniform source.
    double u1 = 1.0 - uniform01(rng), u2 = uniform01(rng);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2 * M_PI * u2);
  };
  const int vocab = pick(2, 8);
  const int len = pick(1, 6);
  GradientInstance inst{ToyPolicy(len, vocab), {}};
  ToyPolicy old(len, vocab);
  for (std::size_t k = 0; k < inst.policy.size(); ++k) {
    old.table()[k] = normal();
    inst.policy.table()[k] = old.table()[k] + 0.3 * normal();
  }
  const int n_groups = pick(1, 3);
  for (int gi = 0; gi < n_groups; ++gi) {
    RolloutGroup g;
    const int size = pick(2, 8);
    for (int i = 0; i < size; ++i) {
      RolloutSample s;
      s.token_ids = old.sample(rng);
      for (std::size_t t = 0; t < s.token_ids.size(); ++t)
        s.logp_old.push_back(old.log_prob(static_cast<int>(t), s.token_ids[t]));
      s.reward = uniform01(rng);
      g.samples.push_back(std::move(s));
    }
    prepare_group(g);
    inst.groups.push_back(std::move(g));
  }
  refresh_logp_new(inst.policy, inst.groups);
  return inst;
}

ToyRewardFn reference_toy_reward(int render_size) {
  RenderConfig cfg;
  cfg.out_width = cfg.out_height = render_size;
  return [cfg](const std::string& response, const std::string& caption) {
    ReferenceEmbedder embedder;
    RewardBreakdown b = fused_reward(response, caption, nullptr, RewardWeights{1.0, 0.0},
                                     RewardEmbedders{&embedder, &embedder}, cfg);
    return ToyScore{b.fused, b.fmt, b.errored()};
  };
}

void to_json(nlohmann::json& j, const TraceRecord& r) {
  j = nlohmann::json{{"iter", r.iter}, {"mean_reward", r.mean_reward}, {"fmt_rate", r.fmt_rate},
                     {"entropy", r.entropy}};
}

namespace {

struct ScoredSample {
  std::vector<int> tokens;
  ToyScore score;
};

std::vector<std::vector<ScoredSample>> collect(const ToyGrammar& grammar, const ToyPolicy& policy,
                                               const ToyTrainConfig& cfg, int iter,
                                               const ToyRewardFn& reward) {
  const int n = static_cast<int>(grammar.captions.size());
  std::vector<std::vector<ScoredSample>> out(n);
  auto work = [&](int c) {
    std::mt19937_64 rng = stream_rng(cfg.seed, static_cast<std::uint64_t>(iter), static_cast<std::uint64_t>(c));
    auto& bucket = out[c];
    bucket.resize(cfg.group_size);
    for (int i = 0; i < cfg.group_size; ++i) {
      bucket[i].tokens = policy.sample(rng);
      bucket[i].score = reward(grammar.detokenize(bucket[i].tokens), grammar.captions[c]);
    }
  };
  if (cfg.jobs == 1) {
    for (int c = 0; c < n; ++c) work(c);
  } else {
    parallel_for(static_cast<std::size_t>(n), cfg.jobs > 0 ? cfg.jobs : omp_get_max_threads(),
                 [&](std::size_t c) { work(static_cast<int>(c)); });
  }
  return out;
}

}  // namespace

ToyTrainResult train_toy(const ToyGrammar& grammar, const ToyTrainConfig& cfg, const ToyRewardFn& reward) {
  if (cfg.iters < 0 || cfg.group_size < 2 || cfg.epochs < 1 || !(cfg.lr > 0))
    throw std::invalid_argument("invalid toy training configuration");
  if (grammar.captions.empty()) throw std::invalid_argument("toy grammar has no captions");

  ToyTrainResult result;
  ToyPolicy& policy = result.policy = ToyPolicy::with_format_prior(grammar, cfg.format_prior);

  // Adam state, ascent direction.
  constexpr double kBeta1 = 0.9, kBeta2 = 0.95, kEps = 1e-8;
  std::vector<double> m(policy.size(), 0.0), v(policy.size(), 0.0);
  long step = 0;

  for (int iter = 0; iter <= cfg.iters; ++iter) {
    auto batches = collect(grammar, policy, cfg, iter, reward);

    TraceRecord rec;
    rec.iter = iter;
    rec.entropy = policy.entropy();
    std::size_t scored = 0, valid = 0;
    double reward_sum = 0.0;
    for (const auto& bucket : batches)
      for (const auto& s : bucket) {
        if (s.score.errored) continue;
        ++scored;
        valid += s.score.fmt;
        reward_sum += s.score.reward;
      }
    if (scored > 0) {
      rec.mean_reward = reward_sum / static_cast<double>(scored);
      rec.fmt_rate = static_cast<double>(valid) / static_cast<double>(scored);
    }
    result.trace.push_back(rec);
    if (iter == cfg.iters) break;

    std::vector<RolloutGroup> groups;
    for (std::size_t c = 0; c < batches.size(); ++c) {
      RolloutGroup g;
      g.caption = grammar.captions[c];
      for (auto& s : batches[c]) {
        RolloutSample r;
        r.token_ids = std::move(s.tokens);
        for (std::size_t t = 0; t < r.token_ids.size(); ++t)
          r.logp_old.push_back(policy.log_prob(static_cast<int>(t), r.token_ids[t]));
        r.logp_new = r.logp_old;
        r.reward = s.score.reward;
        r.errored = s.score.errored;
        g.samples.push_back(std::move(r));
      }
      if (prepare_group(g)) groups.push_back(std::move(g));
    }
    if (groups.empty()) continue;

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
      std::vector<double> grad = toy_gradient(policy, groups, cfg.clip);
      ++step;
      const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(step));
      for (std::size_t k = 0; k < grad.size(); ++k) {
        m[k] = kBeta1 * m[k] + (1 - kBeta1) * grad[k];
        v[k] = kBeta2 * v[k] + (1 - kBeta2) * grad[k] * grad[k];
        policy.table()[k] += cfg.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + kEps);
      }
    }
  }
  return result;
}

namespace {

constexpr char kMagic[16] = {'S', 'G', 'P', 'T', 'O', 'Y', 'P', 'O', 'L', 'I', 'C', 'Y', 0, 0, 0, 0};

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t x) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(x >> (8 * i)));
}
std::uint32_t get_u32(const std::uint8_t* p) {
  std::uint32_t x = 0;
  for (int i = 0; i < 4; ++i) x |= static_cast<std::uint32_t>(p[i]) << (8 * i);
  return x;
}

}  // namespace

std::vector<std::uint8_t> serialize_policy(const ToyPolicy& policy) {
  std::vector<std::uint8_t> out(kMagic, kMagic + 16);
  put_u32(out, kSnapshotVersion);
  put_u32(out, static_cast<std::uint32_t>(policy.max_len()));
  put_u32(out, static_cast<std::uint32_t>(policy.vocab_size()));
  put_u32(out, 0);
  for (double x : policy.table()) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, 8);
    for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
  }
  return out;
}

ToyPolicy deserialize_policy(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 32 || std::memcmp(bytes.data(), kMagic, 16) != 0)
    throw std::invalid_argument("not a toy policy snapshot");
  const std::uint32_t version = get_u32(bytes.data() + 16);
  if (version != kSnapshotVersion)
    throw std::invalid_argument("unsupported snapshot version " + std::to_string(version));
  const std::uint32_t rows = get_u32(bytes.data() + 20), cols = get_u32(bytes.data() + 24);
  const std::uint64_t count = static_cast<std::uint64_t>(rows) * cols;
  if (rows < 1 || cols < 2 || bytes.size() != 32 + count * 8)
    throw std::invalid_argument("snapshot size does not match its header");
  ToyPolicy policy(static_cast<int>(rows), static_cast<int>(cols));
  for (std::uint64_t k = 0; k < count; ++k) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(bytes[32 + k * 8 + i]) << (8 * i);
    std::memcpy(&policy.table()[k], &bits, 8);
  }
  return policy;
}

void save_policy(const std::filesystem::path& path, const ToyPolicy& policy) {
  auto bytes = serialize_policy(policy);
  write_file_atomic(path, std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
}

ToyPolicy load_policy(const std::filesystem::path& path) {
  std::string raw = read_file(path);
  return deserialize_policy(
      std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(raw.data()), raw.size()));
}

}  // namespace sgp
