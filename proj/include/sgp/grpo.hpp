#pragma once

#include <span>
#include <string>
#include <vector>

namespace sgp {

struct ClipConfig {
  double clip_low = 0.20;
  double clip_high = 0.28;
};

inline constexpr double kDegenerateStd = 1e-8;

// (R_i - mean) / population std; all zeros when std < 1e-8. Deviations are
// taken relative to the first reward so a constant shift that is exact in
// floating point leaves the output bit-identical.
// Throws std::invalid_argument for fewer than two rewards.
std::vector<double> normalize_advantages(std::span<const double> rewards);

// min(r*A, clip(r, 1-low, 1+high)*A)
double surrogate_term(double ratio, double advantage, const ClipConfig& clip);

// Derivative of surrogate_term with respect to the ratio. At a tie between the
// two branches the unclipped one is used.
double surrogate_derivative(double ratio, double advantage, const ClipConfig& clip);

struct RolloutSample {
  std::vector<int> token_ids;
  std::vector<double> logp_new;
  std::vector<double> logp_old;
  double reward = 0.0;
  bool errored = false;
};

struct RolloutGroup {
  std::string caption;
  std::vector<RolloutSample> samples;
  std::vector<double> advantages;  // one per sample, broadcast to its tokens
};

// Drops errored samples and fills advantages. Returns false (and leaves the
// group empty) when fewer than two samples remain.
bool prepare_group(RolloutGroup& group);

// 1/G sum_i 1/|s_i| sum_t surrogate(exp(logp_new - logp_old), A_i).
// Throws std::invalid_argument on non-finite log-probabilities or malformed groups.
double grpo_objective(const RolloutGroup& group, const ClipConfig& clip);

}  // namespace sgp
