#include "sgp/parallel.hpp"

#include <stdexcept>

#include <omp.h>

#include "sgp/parallel_for.hpp"

namespace sgp {

int resolve_jobs(int jobs) {
  if (jobs < 0) throw std::invalid_argument("jobs must be >= 0");
  return jobs == 0 ? omp_get_max_threads() : jobs;
}

namespace {

std::optional<RasterImage> try_render(const std::string& source, const RenderConfig& cfg) {
  try {
    return render(parse_svg(source), cfg);
  } catch (const ParseError&) {
    return std::nullopt;
  } catch (const RenderError&) {
    return std::nullopt;
  }
}

}  // namespace

std::vector<ValidationReport> validate_batch_serial(std::span<const std::string> responses,
                                                    const RenderConfig& cfg) {
  const Renderer renderer = make_renderer(cfg);
  std::vector<ValidationReport> out;
  out.reserve(responses.size());
  for (const auto& r : responses) out.push_back(validate(r, renderer));
  return out;
}

std::vector<ValidationReport> validate_batch_omp(std::span<const std::string> responses,
                                                 const RenderConfig& cfg, int jobs) {
  const Renderer renderer = make_renderer(cfg);
  std::vector<ValidationReport> out(responses.size());
  parallel_for(responses.size(), resolve_jobs(jobs), [&](std::size_t i) { out[i] = validate(responses[i], renderer); });
  return out;
}

std::vector<std::optional<RasterImage>> render_batch_serial(std::span<const std::string> sources,
                                                            const RenderConfig& cfg) {
  std::vector<std::optional<RasterImage>> out;
  out.reserve(sources.size());
  for (const auto& s : sources) out.push_back(try_render(s, cfg));
  return out;
}

std::vector<std::optional<RasterImage>> render_batch_omp(std::span<const std::string> sources,
                                                         const RenderConfig& cfg, int jobs) {
  std::vector<std::optional<RasterImage>> out(sources.size());
  parallel_for(sources.size(), resolve_jobs(jobs), [&](std::size_t i) { out[i] = try_render(sources[i], cfg); });
  return out;
}

std::vector<RewardBreakdown> score_batch_serial(std::span<const ScoreItem> items, const RewardWeights& weights,
                                                const RewardEmbedders& embedders, const RenderConfig& cfg) {
  std::vector<RewardBreakdown> out;
  out.reserve(items.size());
  for (const auto& it : items)
    out.push_back(fused_reward(it.response, it.caption, it.reference ? &*it.reference : nullptr, weights,
                               embedders, cfg));
  return out;
}

std::vector<RewardBreakdown> score_batch_omp(std::span<const ScoreItem> items, const RewardWeights& weights,
                                             const RewardEmbedders& embedders, const RenderConfig& cfg,
                                             int jobs) {
  std::vector<RewardBreakdown> out(items.size());
  parallel_for(items.size(), resolve_jobs(jobs), [&](std::size_t i) {
    const ScoreItem& it = items[i];
    out[i] = fused_reward(it.response, it.caption, it.reference ? &*it.reference : nullptr, weights, embedders,
                          cfg);
  });
  return out;
}

BonCurve bon_curve_omp(std::span<const std::vector<double>> per_prompt_scores,
                       std::span<const std::size_t> n_values, int jobs) {
  if (per_prompt_scores.empty()) throw std::invalid_argument("bon_curve needs at least one prompt");
  const std::size_t p = per_prompt_scores.size(), m = n_values.size();
  std::vector<double> table(p * m);
  parallel_for(p, resolve_jobs(jobs), [&](std::size_t i) {
    for (std::size_t j = 0; j < m; ++j) table[i * m + j] = bon_estimate(per_prompt_scores[i], n_values[j]);
  });
  BonCurve curve;
  for (std::size_t j = 0; j < m; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < p; ++i) sum += table[i * m + j];
    curve.n_values.push_back(n_values[j]);
    curve.scores.push_back(sum / static_cast<double>(p));
  }
  return curve;
}

}  // namespace sgp
