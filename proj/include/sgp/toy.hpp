#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "sgp/grpo.hpp"
#include "sgp/rng.hpp"

namespace sgp {

// Token vocabulary and caption set for the toy SVG task. Token 0 is <eos>.
struct ToyGrammar {
  std::vector<std::string> vocab;
  std::vector<std::string> captions;
  int max_len = 6;
  // Grammatical tokens per position, used to build the initial format prior.
  std::vector<std::vector<int>> prior_classes;

  static constexpr int kEos = 0;

  // 8 colors x 4 shapes, captions "{color} {shape}".
  static ToyGrammar color_shape();

  std::string detokenize(std::span<const int> tokens) const;
};

// Per-position logits table, row-major [max_len x vocab_size].
class ToyPolicy {
 public:
  ToyPolicy() = default;
  ToyPolicy(int max_len, int vocab_size);

  int max_len() const { return max_len_; }
  int vocab_size() const { return vocab_size_; }
  std::size_t size() const { return logits_.size(); }

  double& logit(int t, int v) { return logits_[index(t, v)]; }
  double logit(int t, int v) const { return logits_[index(t, v)]; }
  std::vector<double>& table() { return logits_; }
  const std::vector<double>& table() const { return logits_; }

  std::vector<double> probs(int t) const;
  double log_prob(int t, int v) const;
  // Mean over positions of the row entropy in nats.
  double entropy() const;

  // Draws tokens until <eos> (kept) or max_len.
  std::vector<int> sample(std::mt19937_64& rng, int eos = ToyGrammar::kEos) const;

  // Uniform within each class with total mass `class_mass`, the rest spread over other tokens.
  static ToyPolicy with_format_prior(const ToyGrammar& grammar, double class_mass);

  friend bool operator==(const ToyPolicy&, const ToyPolicy&) = default;

 private:
  std::size_t index(int t, int v) const { return static_cast<std::size_t>(t) * vocab_size_ + v; }
  int max_len_ = 0;
  int vocab_size_ = 0;
  std::vector<double> logits_;
};

// Refreshes logp_new of every sample under `policy`.
void refresh_logp_new(const ToyPolicy& policy, std::span<RolloutGroup> groups);

// Mean of grpo_objective over groups, with logp_new taken from `policy`.
double toy_objective(const ToyPolicy& policy, std::span<const RolloutGroup> groups,
                     const ClipConfig& clip);

// Exact gradient of toy_objective with respect to the logits table.
std::vector<double> toy_gradient(const ToyPolicy& policy, std::span<const RolloutGroup> groups,
                                 const ClipConfig& clip);

struct GradientCheck {
  double max_rel_error = 0.0;
  double max_abs_gradient = 0.0;
};

// Analytic gradient against central differences with step h. Per-entry error
// is |analytic - numeric| / max(|analytic|, |numeric|, 1e-6).
GradientCheck policy_gradient_check(const ToyPolicy& policy, std::span<const RolloutGroup> groups,
                                    const ClipConfig& clip, double h = 1e-5);

// Random instance (vocab 2..8, length 1..6, G 2..8) with an old policy that
// differs from the current one, so some ratios fall outside the clip range.
struct GradientInstance {
  ToyPolicy policy;
  std::vector<RolloutGroup> groups;
};
GradientInstance random_gradient_instance(std::uint64_t seed);

struct ToyScore {
  double reward = 0.0;
  int fmt = 0;
  bool errored = false;
};
using ToyRewardFn = std::function<ToyScore(const std::string& response, const std::string& caption)>;

// Fused reward with the reference embedder, lambda = (1, 0), rendered at size x size.
ToyRewardFn reference_toy_reward(int render_size);

struct ToyTrainConfig {
  int iters = 200;
  int group_size = 8;
  double lr = 1e-2;
  int epochs = 4;
  ClipConfig clip;
  std::uint64_t seed = 17;
  double format_prior = 0.75;
  int jobs = 0;  // 0 = OpenMP default, 1 = serial
};

struct TraceRecord {
  int iter = 0;
  double mean_reward = 0.0;
  double fmt_rate = 0.0;
  double entropy = 0.0;
  friend bool operator==(const TraceRecord&, const TraceRecord&) = default;
};

void to_json(nlohmann::json& j, const TraceRecord& r);

struct ToyTrainResult {
  std::vector<TraceRecord> trace;  // iters + 1 records; the last one is evaluation only
  ToyPolicy policy;
};

ToyTrainResult train_toy(const ToyGrammar& grammar, const ToyTrainConfig& cfg,
                         const ToyRewardFn& reward);

// Snapshot: 16-byte magic "SGPTOYPOLICY\0\0\0\0", then u32 version, rows, cols,
// reserved, then rows*cols float64, all little-endian.
inline constexpr std::uint32_t kSnapshotVersion = 1;
std::vector<std::uint8_t> serialize_policy(const ToyPolicy& policy);
ToyPolicy deserialize_policy(std::span<const std::uint8_t> bytes);
void save_policy(const std::filesystem::path& path, const ToyPolicy& policy);
ToyPolicy load_policy(const std::filesystem::path& path);

}  // namespace sgp
