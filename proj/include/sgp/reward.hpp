#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sgp/embed.hpp"
#include "sgp/image.hpp"
#include "sgp/raster.hpp"
#include "sgp/response.hpp"

namespace sgp {

struct RewardWeights {
  double lambda_text = 1.0;
  double lambda_image = 0.0;
};

struct RewardBreakdown {
  int fmt = 0;
  std::optional<double> r_text;
  std::optional<double> r_image;
  double fused = 0.0;
  ValidationReport validation;
  std::optional<std::string> error;  // embedder/transport failure; sample is excluded downstream

  bool errored() const { return error.has_value(); }
};

void to_json(nlohmann::json& j, const RewardBreakdown& b);

// Maps a cosine in [-1, 1] onto [0, 1].
inline double rescale_cosine(double c) { return (c + 1.0) / 2.0; }

double text_reward(const std::string& caption, const RasterImage& image, Embedder& embedder);
double image_reward(const RasterImage& reference, const RasterImage& image, Embedder& embedder);

// fmt * (lambda_text * r_text + lambda_image * r_image), absent terms count as 0.
double fuse(int fmt, std::optional<double> r_text, std::optional<double> r_image,
            const RewardWeights& weights);

struct RewardEmbedders {
  Embedder* text = nullptr;   // required when lambda_text > 0
  Embedder* image = nullptr;  // required when lambda_image > 0 and a reference is given
};

// Format gate first; perceptual terms are computed only when it passes and
// only for terms with a positive weight. Without a reference image the image
// term is absent. Embedder exceptions are caught and reported in `error`.
RewardBreakdown fused_reward(std::string_view raw_response, const std::string& caption,
                             const RasterImage* reference, const RewardWeights& weights,
                             const RewardEmbedders& embedders, const RenderConfig& cfg = {});

}  // namespace sgp
