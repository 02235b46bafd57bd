#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace sgp {

class CorpusError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct CorpusRecord {
  std::string id;
  std::string caption;
  std::optional<std::string> svg_source;
  std::optional<std::string> ref_image_path;
  std::string source_tag;              // "coco-like" or "svg-collection"
  std::optional<bool> contains_text;   // precomputed external text judgment, if any
  nlohmann::json extra = nlohmann::json::object();  // unknown fields, kept on rewrite
  friend bool operator==(const CorpusRecord&, const CorpusRecord&) = default;
};

void to_json(nlohmann::json& j, const CorpusRecord& r);
void from_json(const nlohmann::json& j, CorpusRecord& r);  // throws CorpusError

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path);
void write_corpus(const std::filesystem::path& path, std::span<const CorpusRecord> records);

const std::vector<std::string>& default_text_keywords();

// Lowercased words split at every character that is not a letter or digit.
// ASCII punctuation (including '-' and '\'') and Unicode spaces/punctuation
// are boundaries; other non-ASCII characters count as letters.
std::vector<std::string> caption_words(std::string_view caption);

struct FilterDecision {
  bool keep = true;
  std::string reason;  // empty when kept; "tag:<name>", "keyword:<w>[,<w>...]" or "contains_text"
};

// Drops records whose SVG holds a text-rendering tag, whose caption contains a
// keyword as a whole word (case-insensitive), or whose contains_text hook is true.
FilterDecision filter_text_content(const CorpusRecord& record, std::span<const std::string> keywords);

// Per-source counts: floor(w * target) plus largest-remainder top-up (ties to
// the earlier source). Weights must be >= 0 and sum to 1 within 1e-9.
std::vector<std::size_t> mix_quotas(std::span<const double> weights, std::size_t target);

struct MixSource {
  std::span<const CorpusRecord> records;
  double weight = 0.0;
};

// Seeded sampling without replacement per source; output is grouped by source
// in source order. Throws CorpusError when a source is smaller than its quota.
std::vector<CorpusRecord> mix(std::span<const MixSource> sources, std::size_t target_size, std::uint64_t seed);

}  // namespace sgp
