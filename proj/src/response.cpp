#include "sgp/response.hpp"

#include <array>
#include <cctype>

#include "text_util.hpp"

namespace sgp {
namespace {

bool only_whitespace(std::string_view s) { return trim(s).empty(); }

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t n = 0;
  for (std::size_t pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size()))
    ++n;
  return n;
}

bool is_name_char(char ch) {
  return std::isalnum(static_cast<unsigned char>(ch)) || ch == '-' || ch == '_' || ch == '.' ||
         ch == ':';
}

}  // namespace

ModelResponse extract_response(std::string_view raw_text) {
  ModelResponse out;
  out.raw_text = std::string(raw_text);

  constexpr std::string_view kThinkOpen = "<THINK>", kThinkClose = "</THINK>";
  constexpr std::string_view kAnswerOpen = "<ANSWER>", kAnswerClose = "</ANSWER>";
  for (std::string_view tag : {kThinkOpen, kThinkClose, kAnswerOpen, kAnswerClose})
    if (count_occurrences(raw_text, tag) != 1) return out;

  std::size_t think_open = raw_text.find(kThinkOpen);
  std::size_t think_close = raw_text.find(kThinkClose);
  std::size_t answer_open = raw_text.find(kAnswerOpen);
  std::size_t answer_close = raw_text.find(kAnswerClose);
  if (!(think_open < think_close && think_close < answer_open && answer_open < answer_close))
    return out;

  std::size_t think_begin = think_open + kThinkOpen.size();
  std::size_t answer_begin = answer_open + kAnswerOpen.size();
  std::size_t gap_begin = think_close + kThinkClose.size();
  std::size_t tail_begin = answer_close + kAnswerClose.size();
  if (!only_whitespace(raw_text.substr(0, think_open)) ||
      !only_whitespace(raw_text.substr(gap_begin, answer_open - gap_begin)) ||
      !only_whitespace(raw_text.substr(tail_begin)))
    return out;

  out.structure_ok = true;
  out.think = std::string(trim(raw_text.substr(think_begin, think_close - think_begin)));
  out.answer = std::string(trim(raw_text.substr(answer_begin, answer_close - answer_begin)));
  return out;
}

std::optional<std::string> check_banned_tags(std::string_view source) {
  static constexpr std::array<std::string_view, 3> kBanned = {"text", "tspan", "textPath"};
  for (std::size_t lt = source.find('<'); lt != std::string_view::npos; lt = source.find('<', lt + 1)) {
    std::size_t i = lt + 1;
    if (i < source.size() && source[i] == '/') ++i;
    while (i < source.size() && is_xml_space(source[i])) ++i;
    std::size_t name_begin = i;
    while (i < source.size() && is_name_char(source[i])) ++i;
    std::string_view name = source.substr(name_begin, i - name_begin);
    if (auto colon = name.rfind(':'); colon != std::string_view::npos) name.remove_prefix(colon + 1);
    std::string lowered = to_lower(name);
    for (std::string_view banned : kBanned)
      if (lowered == to_lower(banned)) return std::string(banned);
  }
  return std::nullopt;
}

void to_json(nlohmann::json& j, const ValidationReport& r) {
  j = nlohmann::json{{"structure_ok", r.structure_ok},
                     {"parse_ok", r.parse_ok},
                     {"banned_tag_found", r.banned_tag_found ? nlohmann::json(*r.banned_tag_found)
                                                             : nlohmann::json(nullptr)},
                     {"render_ok", r.render_ok},
                     {"fmt_reward", r.fmt_reward}};
}

void from_json(const nlohmann::json& j, ValidationReport& r) {
  r.structure_ok = j.at("structure_ok").get<bool>();
  r.parse_ok = j.at("parse_ok").get<bool>();
  const auto& banned = j.at("banned_tag_found");
  r.banned_tag_found = banned.is_null() ? std::nullopt : std::optional(banned.get<std::string>());
  r.render_ok = j.at("render_ok").get<bool>();
  r.fmt_reward = j.at("fmt_reward").get<int>();
}

ValidationResult validate_detailed(std::string_view raw_text, const Renderer& renderer) {
  ValidationResult result;
  ValidationReport& report = result.report;
  result.response = extract_response(raw_text);
  report.structure_ok = result.response.structure_ok;
  report.banned_tag_found = check_banned_tags(raw_text);

  if (report.structure_ok) {
    try {
      result.document = parse_svg(*result.response.answer);
      report.parse_ok = true;
    } catch (const ParseError&) {
      report.parse_ok = false;
    }
  }
  if (report.parse_ok) {
    result.image = renderer(*result.document);
    report.render_ok = result.image.has_value();
  }
  report.fmt_reward = (report.structure_ok && report.parse_ok && !report.banned_tag_found &&
                       report.render_ok)
                          ? 1
                          : 0;
  return result;
}

}  // namespace sgp
