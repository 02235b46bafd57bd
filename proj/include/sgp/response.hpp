#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "sgp/image.hpp"
#include "sgp/svg.hpp"

namespace sgp {

// A raw policy output split into its reasoning and answer blocks.
struct ModelResponse {
  std::string raw_text;
  std::optional<std::string> think;
  std::optional<std::string> answer;
  bool structure_ok = false;
};

// Requires exactly one <THINK>…</THINK> followed by exactly one <ANSWER>…</ANSWER>,
// case-sensitive, with only whitespace outside and between the two blocks.
ModelResponse extract_response(std::string_view raw_text);

// First of <text>, <tspan>, <textPath> (opening or closing, any case, optional
// namespace prefix) in raw source order. Scans text, not a parse tree.
std::optional<std::string> check_banned_tags(std::string_view source);

struct ValidationReport {
  bool structure_ok = false;
  bool parse_ok = false;
  std::optional<std::string> banned_tag_found;
  bool render_ok = false;
  int fmt_reward = 0;
  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

void to_json(nlohmann::json& j, const ValidationReport& r);
void from_json(const nlohmann::json& j, ValidationReport& r);

// Renderability oracle: returns the raster, or nullopt when rendering fails.
using Renderer = std::function<std::optional<RasterImage>(const SvgDocument&)>;

struct ValidationResult {
  ValidationReport report;
  ModelResponse response;
  std::optional<SvgDocument> document;
  std::optional<RasterImage> image;  // present iff render_ok
};

// Full format gate. Every check runs (banned tags are screened even when the
// structure check fails) so the report is complete.
ValidationResult validate_detailed(std::string_view raw_text, const Renderer& renderer);

inline ValidationReport validate(std::string_view raw_text, const Renderer& renderer) {
  return validate_detailed(raw_text, renderer).report;
}

}  // namespace sgp
