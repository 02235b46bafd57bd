#include "sgp/reward.hpp"

#include <stdexcept>

namespace sgp {

void to_json(nlohmann::json& j, const RewardBreakdown& b) {
  j = nlohmann::json{{"fmt", b.fmt},
                     {"r_text", b.r_text ? nlohmann::json(*b.r_text) : nlohmann::json(nullptr)},
                     {"r_image", b.r_image ? nlohmann::json(*b.r_image) : nlohmann::json(nullptr)},
                     {"fused", b.fused},
                     {"validation", b.validation}};
  if (b.error) j["error"] = *b.error;
}

double text_reward(const std::string& caption, const RasterImage& image, Embedder& embedder) {
  EmbeddingVector t = embedder.embed_text(caption);
  EmbeddingVector v = embedder.embed_image(image);
  return rescale_cosine(cosine(t, v));
}

double image_reward(const RasterImage& reference, const RasterImage& image, Embedder& embedder) {
  RasterImage pair[2] = {image, reference};
  auto vecs = embedder.embed_images(pair);
  return rescale_cosine(cosine(vecs.at(0), vecs.at(1)));
}

double fuse(int fmt, std::optional<double> r_text, std::optional<double> r_image,
            const RewardWeights& weights) {
  if (fmt == 0) return 0.0;
  double inner = 0.0;
  if (r_text) inner += weights.lambda_text * *r_text;
  if (r_image) inner += weights.lambda_image * *r_image;
  return inner;
}

RewardBreakdown fused_reward(std::string_view raw_response, const std::string& caption,
                             const RasterImage* reference, const RewardWeights& weights,
                             const RewardEmbedders& embedders, const RenderConfig& cfg) {
  if (weights.lambda_text < 0 || weights.lambda_image < 0)
    throw std::invalid_argument("reward weights must be non-negative");
  RewardBreakdown out;
  ValidationResult gate = validate_detailed(raw_response, make_renderer(cfg));
  out.validation = gate.report;
  out.fmt = gate.report.fmt_reward;
  if (out.fmt == 0) return out;

  const bool want_text = weights.lambda_text > 0;
  const bool want_image = weights.lambda_image > 0 && reference;
  if (want_text && !embedders.text) throw std::invalid_argument("text embedder missing");
  if (want_image && !embedders.image) throw std::invalid_argument("image embedder missing");

  const RasterImage& image = *gate.image;
  try {
    if (want_text) out.r_text = text_reward(caption, image, *embedders.text);
    if (want_image) out.r_image = image_reward(*reference, image, *embedders.image);
  } catch (const std::exception& e) {
    out.r_text.reset();
    out.r_image.reset();
    out.fused = 0.0;
    out.error = e.what();
    return out;
  }
  out.fused = fuse(out.fmt, out.r_text, out.r_image, weights);
  return out;
}

}  // namespace sgp
