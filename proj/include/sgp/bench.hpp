#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "sgp/embed.hpp"
#include "sgp/image.hpp"

namespace sgp {

class BenchError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class BenchCategory { kColor, kShape, kTexture, kRel2d, kRel3d, kImplicit, kNumeracy };
inline constexpr std::array<BenchCategory, 7> kAllCategories = {
    BenchCategory::kColor, BenchCategory::kShape,    BenchCategory::kTexture, BenchCategory::kRel2d,
    BenchCategory::kRel3d, BenchCategory::kImplicit, BenchCategory::kNumeracy};

std::string to_string(BenchCategory c);
BenchCategory parse_category(std::string_view s);  // throws BenchError

enum class JudgeAspect { kBinding, kRelation, kNumTotal, kNumItem, kNumCpi };
std::string to_string(JudgeAspect a);
JudgeAspect parse_aspect(std::string_view s);

// The aspects a prompt of this category is judged on.
std::vector<JudgeAspect> aspects_for(BenchCategory c);

const std::array<std::string_view, 80>& coco_objects();

struct BenchPrompt {
  std::string id;
  BenchCategory category = BenchCategory::kColor;
  std::string text;
  std::optional<std::vector<std::pair<std::string, int>>> numeracy_spec;
  friend bool operator==(const BenchPrompt&, const BenchPrompt&) = default;
};

void to_json(nlohmann::json& j, const BenchPrompt& p);
void from_json(const nlohmann::json& j, BenchPrompt& p);

struct CompBenchCounts {
  int per_binding_relation_subcategory = 400;
  int numeracy_per_total = 100;  // totals 3..10
};

std::vector<BenchPrompt> generate_compbench(std::uint64_t seed, const CompBenchCounts& counts = {});

std::string plural(std::string_view noun);
std::string with_article(std::string_view phrase);  // "a"/"an" by the first letter

// Judge template with placeholders filled in. For kNumCpi, `cpi_index`
// selects the (noun, count) entry. Throws BenchError for incompatible aspects.
std::string judge_prompt_for(const BenchPrompt& prompt, JudgeAspect aspect, std::size_t cpi_index = 0);

struct JudgeVerdict {
  std::string reasoning;
  double score = 0.0;
  std::vector<std::string> warnings;
};

// Takes the last "SCORE:" line. With `rubric`, the score must be one of
// {0, 30, 50, 100}. Throws BenchError when no valid score is present.
JudgeVerdict parse_verdict(std::string_view reply, bool rubric = false);

// One judged (or unjudged) aspect of one prompt.
struct VerdictRecord {
  std::string prompt_id;
  BenchCategory category = BenchCategory::kColor;
  JudgeAspect aspect = JudgeAspect::kBinding;
  std::optional<std::string> item;  // noun, for CPI records
  std::optional<double> score;      // absent = unjudged
  std::string reasoning;
  std::optional<std::string> error;
};

void to_json(nlohmann::json& j, const VerdictRecord& v);
void from_json(const nlohmann::json& j, VerdictRecord& v);

struct CategoryStat {
  double mean = 0.0;
  std::size_t judged = 0;
  std::size_t unjudged = 0;
};

struct NumeracyScores {
  double total = 0.0, item = 0.0, cpi = 0.0, overall = 0.0;
};

inline double numeracy_overall(double total, double item, double cpi) {
  return 0.2 * total + 0.2 * item + 0.6 * cpi;
}

struct CategoryScores {
  CategoryStat color, shape, texture, rel2d, rel3d, implicit;
  CategoryStat num_total, num_item, num_cpi;
  double bind_avg = 0.0;
  double rel_avg = 0.0;
  NumeracyScores numeracy;
  double grand_avg = 0.0;
  double coverage = 0.0;  // judged / (judged + unjudged) over all records
};

// Per-prompt scores are averaged within a category (CPI first within each
// prompt). Unjudged records are excluded and only affect coverage.
// Throws BenchError when any category has no judged prompt.
CategoryScores aggregate(std::span<const VerdictRecord> verdicts);

// Table columns: Color Shape Texture Avg | 2D 3D Implicit Avg | Total Item CPI Overall | Avg
std::string report_tsv(const CategoryScores& s, std::string_view model_name);
std::string report_text(const CategoryScores& s, std::string_view model_name);

// Mean over embedders of the raw cosine between caption and image.
double clip_style_score(const std::string& caption, const RasterImage& image,
                        std::span<Embedder* const> embedders);

// 1 - mean over embedders and unordered pairs of the cosine. Throws for k < 2.
double diversity_score(std::span<const RasterImage> images, std::span<Embedder* const> embedders);
// Same, over precomputed embeddings (one list per embedder).
double diversity_from_embeddings(std::span<const std::vector<EmbeddingVector>> per_embedder);

// Client for POST /v1/judge {prompt, image_png_b64} -> {reasoning, score}.
class JudgeClient {
 public:
  explicit JudgeClient(std::string endpoint, int timeout_seconds = 60,
                       std::optional<std::string> auth_token = std::nullopt);
  // Throws ServiceError on transport failure or a malformed/out-of-range reply.
  JudgeVerdict judge(const std::string& prompt, const RasterImage& image) const;

 private:
  std::string endpoint_;
  int timeout_seconds_;
  std::optional<std::string> auth_token_;
};

}  // namespace sgp
