#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sgp/analysis.hpp"
#include "sgp/image.hpp"
#include "sgp/raster.hpp"
#include "sgp/response.hpp"
#include "sgp/reward.hpp"

// Batch kernels. Each `_serial` function is the reference; the `_omp`
// counterpart splits records across threads and must return identical bytes.
// Output order always equals input order.

namespace sgp {

// 0 means the OpenMP default thread count.
int resolve_jobs(int jobs);

std::vector<ValidationReport> validate_batch_serial(std::span<const std::string> responses,
                                                    const RenderConfig& cfg);
std::vector<ValidationReport> validate_batch_omp(std::span<const std::string> responses,
                                                 const RenderConfig& cfg, int jobs = 0);

// nullopt where parsing or rendering fails.
std::vector<std::optional<RasterImage>> render_batch_serial(std::span<const std::string> sources,
                                                            const RenderConfig& cfg);
std::vector<std::optional<RasterImage>> render_batch_omp(std::span<const std::string> sources,
                                                         const RenderConfig& cfg, int jobs = 0);

struct ScoreItem {
  std::string response;
  std::string caption;
  std::optional<RasterImage> reference;
};

// Embedders are shared across threads and must be safe for concurrent use
// (the reference and remote embedders are).
std::vector<RewardBreakdown> score_batch_serial(std::span<const ScoreItem> items, const RewardWeights& weights,
                                                const RewardEmbedders& embedders, const RenderConfig& cfg);
std::vector<RewardBreakdown> score_batch_omp(std::span<const ScoreItem> items, const RewardWeights& weights,
                                             const RewardEmbedders& embedders, const RenderConfig& cfg,
                                             int jobs = 0);

// Per-prompt estimates in parallel, then a fixed-order reduction.
BonCurve bon_curve_omp(std::span<const std::vector<double>> per_prompt_scores,
                       std::span<const std::size_t> n_values, int jobs = 0);

}  // namespace sgp
