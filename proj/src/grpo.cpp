#include "sgp/grpo.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace sgp {

std::vector<double> normalize_advantages(std::span<const double> rewards) {
  const std::size_t n = rewards.size();
  if (n < 2) throw std::invalid_argument("normalize_advantages needs at least two rewards");
  std::vector<double> dev(n);
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!std::isfinite(rewards[i])) throw std::invalid_argument("non-finite reward");
    dev[i] = rewards[i] - rewards[0];
    sum += dev[i];
  }
  const double mean = sum / static_cast<double>(n);
  double sq = 0.0;
  for (double& d : dev) {
    d -= mean;
    sq += d * d;
  }
  const double sd = std::sqrt(sq / static_cast<double>(n));
  if (!(sd >= kDegenerateStd)) return std::vector<double>(n, 0.0);
  for (double& d : dev) d /= sd;
  return dev;
}

double surrogate_term(double ratio, double advantage, const ClipConfig& clip) {
  const double clipped = std::clamp(ratio, 1.0 - clip.clip_low, 1.0 + clip.clip_high);
  return std::min(ratio * advantage, clipped * advantage);
}

double surrogate_derivative(double ratio, double advantage, const ClipConfig& clip) {
  const double lo = 1.0 - clip.clip_low, hi = 1.0 + clip.clip_high;
  const double clipped = std::clamp(ratio, lo, hi);
  if (ratio * advantage <= clipped * advantage) return advantage;
  return (ratio > lo && ratio < hi) ? advantage : 0.0;
}

bool prepare_group(RolloutGroup& group) {
  std::erase_if(group.samples, [](const RolloutSample& s) { return s.errored; });
  if (group.samples.size() < 2) {
    group.samples.clear();
    group.advantages.clear();
    return false;
  }
  std::vector<double> rewards;
  rewards.reserve(group.samples.size());
  for (const auto& s : group.samples) rewards.push_back(s.reward);
  group.advantages = normalize_advantages(rewards);
  return true;
}

double grpo_objective(const RolloutGroup& group, const ClipConfig& clip) {
  if (group.samples.size() != group.advantages.size())
    throw std::invalid_argument("group advantages do not match samples");
  if (group.samples.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < group.samples.size(); ++i) {
    const RolloutSample& s = group.samples[i];
    if (s.logp_new.size() != s.logp_old.size() || s.logp_new.empty())
      throw std::invalid_argument("sample log-probability arrays are empty or mismatched");
    double inner = 0.0;
    for (std::size_t t = 0; t < s.logp_new.size(); ++t) {
      if (!std::isfinite(s.logp_new[t]) || !std::isfinite(s.logp_old[t]))
        throw std::invalid_argument("non-finite log-probability");
      inner += surrogate_term(std::exp(s.logp_new[t] - s.logp_old[t]), group.advantages[i], clip);
    }
    total += inner / static_cast<double>(s.logp_new.size());
  }
  return total / static_cast<double>(group.samples.size());
}

}  // namespace sgp
