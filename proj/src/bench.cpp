#include "sgp/bench.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <map>
#include <sstream>

#include "sgp/png.hpp"
#include "sgp/rng.hpp"
#include "sgp/service_client.hpp"
#include "text_util.hpp"

namespace sgp {

namespace {

constexpr std::array<std::string_view, 7> kCategoryNames = {"color", "shape",    "texture", "rel2d",
                                                            "rel3d", "implicit", "numeracy"};
constexpr std::array<std::string_view, 5> kAspectNames = {"binding", "relation", "num_total", "num_item",
                                                          "num_cpi"};

constexpr std::array<std::string_view, 80> kCoco = {
    "person",        "bicycle",      "car",           "motorcycle",    "airplane",     "bus",
    "train",         "truck",        "boat",          "traffic light", "fire hydrant", "stop sign",
    "parking meter", "bench",        "bird",          "cat",           "dog",          "horse",
    "sheep",         "cow",          "elephant",      "bear",          "zebra",        "giraffe",
    "backpack",      "umbrella",     "handbag",       "tie",           "suitcase",     "frisbee",
    "skis",          "snowboard",    "sports ball",   "kite",          "baseball bat", "baseball glove",
    "skateboard",    "surfboard",    "tennis racket", "bottle",        "wine glass",   "cup",
    "fork",          "knife",        "spoon",         "bowl",          "banana",       "apple",
    "sandwich",      "orange",       "broccoli",      "carrot",        "hot dog",      "pizza",
    "donut",         "cake",         "chair",         "couch",         "potted plant", "bed",
    "dining table",  "toilet",       "tv",            "laptop",        "mouse",        "remote",
    "keyboard",      "cell phone",   "microwave",     "oven",          "toaster",      "sink",
    "refrigerator",  "book",         "clock",         "vase",          "scissors",     "teddy bear",
    "hair drier",    "toothbrush"};

constexpr std::string_view kColors[] = {"red",   "orange", "yellow", "green", "blue", "purple",
                                        "pink",  "brown",  "black",  "white", "gray"};
constexpr std::string_view kShapes[] = {"round",     "square",  "rectangular", "triangular", "oval",
                                        "circular",  "cubic",   "cylindrical", "spherical",  "conical"};
constexpr std::string_view kTextures[] = {"wooden", "metallic", "plastic", "glass",
                                          "leather", "fluffy",  "rubber",  "fabric"};
constexpr std::string_view kRel2d[] = {"on the left of", "on the right of", "on top of",
                                       "on the bottom of", "next to", "near"};
constexpr std::string_view kRel3d[] = {"in front of", "behind", "hidden by"};
constexpr std::string_view kImplicit[] = {"holding", "riding", "sitting on", "watching", "carrying",
                                          "leaning against"};
constexpr std::string_view kNumberWords[] = {"zero", "one", "two",   "three", "four", "five",
                                             "six",  "seven", "eight", "nine",  "ten"};

template <std::size_t N>
std::string_view pick(std::mt19937_64& rng, const std::string_view (&options)[N]) {
  return options[uniform_index(rng, N)];
}

// k distinct objects, uniformly without replacement.
std::vector<std::string_view> pick_objects(std::mt19937_64& rng, std::size_t k) {
  std::array<std::size_t, 80> idx;
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::vector<std::string_view> out;
  for (std::size_t i = 0; i < k; ++i) {
    std::size_t j = i + uniform_index(rng, idx.size() - i);
    std::swap(idx[i], idx[j]);
    out.push_back(kCoco[idx[i]]);
  }
  return out;
}

std::string make_id(BenchCategory c, int n) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s-%04d", kCategoryNames[static_cast<int>(c)].data(), n);
  return buf;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

}  // namespace

std::string to_string(BenchCategory c) { return std::string(kCategoryNames.at(static_cast<int>(c))); }

BenchCategory parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i)
    if (kCategoryNames[i] == s) return static_cast<BenchCategory>(i);
  throw BenchError("unknown category '" + std::string(s) + "'");
}

std::string to_string(JudgeAspect a) { return std::string(kAspectNames.at(static_cast<int>(a))); }

JudgeAspect parse_aspect(std::string_view s) {
  for (std::size_t i = 0; i < kAspectNames.size(); ++i)
    if (kAspectNames[i] == s) return static_cast<JudgeAspect>(i);
  throw BenchError("unknown judge aspect '" + std::string(s) + "'");
}

std::vector<JudgeAspect> aspects_for(BenchCategory c) {
  switch (c) {
    case BenchCategory::kColor:
    case BenchCategory::kShape:
    case BenchCategory::kTexture:
      return {JudgeAspect::kBinding};
    case BenchCategory::kRel2d:
    case BenchCategory::kRel3d:
    case BenchCategory::kImplicit:
      return {JudgeAspect::kRelation};
    case BenchCategory::kNumeracy:
      return {JudgeAspect::kNumTotal, JudgeAspect::kNumItem, JudgeAspect::kNumCpi};
  }
  return {};
}

const std::array<std::string_view, 80>& coco_objects() { return kCoco; }

void to_json(nlohmann::json& j, const BenchPrompt& p) {
  j = nlohmann::json{{"id", p.id}, {"category", to_string(p.category)}, {"text", p.text}};
  if (p.numeracy_spec) {
    auto spec = nlohmann::json::array();
    for (const auto& [noun, count] : *p.numeracy_spec) spec.push_back({noun, count});
    j["numeracy_spec"] = spec;
  }
}

void from_json(const nlohmann::json& j, BenchPrompt& p) {
  p.id = j.at("id").get<std::string>();
  p.category = parse_category(j.at("category").get<std::string>());
  p.text = j.at("text").get<std::string>();
  p.numeracy_spec.reset();
  if (j.contains("numeracy_spec") && !j["numeracy_spec"].is_null()) {
    std::vector<std::pair<std::string, int>> spec;
    for (const auto& e : j["numeracy_spec"]) spec.emplace_back(e.at(0).get<std::string>(), e.at(1).get<int>());
    p.numeracy_spec = std::move(spec);
  }
  if (p.numeracy_spec.has_value() != (p.category == BenchCategory::kNumeracy))
    throw BenchError("prompt " + p.id + ": numeracy_spec must be present exactly for numeracy prompts");
}

std::string plural(std::string_view noun) {
  static const std::map<std::string_view, std::string_view> irregular = {
      {"person", "people"}, {"mouse", "mice"},    {"knife", "knives"},
      {"sheep", "sheep"},   {"skis", "skis"},     {"scissors", "scissors"}};
  // Compound nouns pluralize their last word.
  std::size_t space = noun.rfind(' ');
  std::string head(space == std::string_view::npos ? "" : noun.substr(0, space + 1));
  std::string_view last = space == std::string_view::npos ? noun : noun.substr(space + 1);
  if (auto it = irregular.find(last); it != irregular.end()) return head + std::string(it->second);
  std::string w(last);
  auto ends = [&](std::string_view s) { return w.size() >= s.size() && w.compare(w.size() - s.size(), s.size(), s) == 0; };
  if (ends("s") || ends("x") || ends("ch") || ends("sh")) return head + w + "es";
  if (w.size() >= 2 && w.back() == 'y' && std::string_view("aeiou").find(w[w.size() - 2]) == std::string_view::npos)
    return head + w.substr(0, w.size() - 1) + "ies";
  return head + w + "s";
}

std::string with_article(std::string_view phrase) {
  const bool vowel = !phrase.empty() && std::string_view("aeiouAEIOU").find(phrase[0]) != std::string_view::npos;
  return std::string(vowel ? "an " : "a ") + std::string(phrase);
}

std::vector<BenchPrompt> generate_compbench(std::uint64_t seed, const CompBenchCounts& counts) {
  if (counts.per_binding_relation_subcategory < 0 || counts.numeracy_per_total < 0)
    throw BenchError("prompt counts must be non-negative");
  std::vector<BenchPrompt> out;
  for (BenchCategory c : kAllCategories) {
    std::mt19937_64 rng = stream_rng(seed, 0x62656e6368ULL, static_cast<std::uint64_t>(c));
    int serial = 0;
    auto push = [&](std::string text, std::optional<std::vector<std::pair<std::string, int>>> spec = {}) {
      out.push_back({make_id(c, ++serial), c, std::move(text), std::move(spec)});
    };
    if (c == BenchCategory::kNumeracy) {
      for (int total = 3; total <= 10; ++total) {
        for (int n = 0; n < counts.numeracy_per_total; ++n) {
          const std::size_t k = 1 + uniform_index(rng, static_cast<std::size_t>(std::min(total, 4)));
          // Uniform composition of `total` into k positive parts via k-1 distinct cut points.
          std::vector<int> cuts;
          std::vector<int> pool;
          for (int i = 1; i < total; ++i) pool.push_back(i);
          for (std::size_t i = 0; i + 1 < k; ++i) {
            std::size_t j = i + uniform_index(rng, pool.size() - i);
            std::swap(pool[i], pool[j]);
            cuts.push_back(pool[i]);
          }
          std::sort(cuts.begin(), cuts.end());
          cuts.insert(cuts.begin(), 0);
          cuts.push_back(total);
          auto objects = pick_objects(rng, k);
          std::vector<std::pair<std::string, int>> spec;
          std::vector<std::string> phrases;
          for (std::size_t i = 0; i < k; ++i) {
            int count = cuts[i + 1] - cuts[i];
            spec.emplace_back(std::string(objects[i]), count);
            phrases.push_back(std::string(kNumberWords[count]) + " " +
                              (count == 1 ? std::string(objects[i]) : plural(objects[i])));
          }
          std::string text = phrases.size() == 1
                                 ? phrases[0]
                                 : join(std::vector<std::string>(phrases.begin(), phrases.end() - 1), ", ") +
                                       " and " + phrases.back();
          push(std::move(text), std::move(spec));
        }
      }
      continue;
    }
    for (int n = 0; n < counts.per_binding_relation_subcategory; ++n) {
      auto objects = pick_objects(rng, 2);
      std::string a(objects[0]), b(objects[1]);
      switch (c) {
        case BenchCategory::kColor: {
          std::string_view c1 = pick(rng, kColors), c2;
          do c2 = pick(rng, kColors);
          while (c2 == c1);
          push(with_article(std::string(c1) + " " + a) + " and " + with_article(std::string(c2) + " " + b));
          break;
        }
        case BenchCategory::kShape: {
          std::string_view s1 = pick(rng, kShapes), s2;
          do s2 = pick(rng, kShapes);
          while (s2 == s1);
          push(with_article(std::string(s1) + " " + a) + " and " + with_article(std::string(s2) + " " + b));
          break;
        }
        case BenchCategory::kTexture: {
          std::string_view t1 = pick(rng, kTextures), t2;
          do t2 = pick(rng, kTextures);
          while (t2 == t1);
          push(with_article(std::string(t1) + " " + a) + " and " + with_article(std::string(t2) + " " + b));
          break;
        }
        case BenchCategory::kRel2d:
          push(with_article(a) + " " + std::string(pick(rng, kRel2d)) + " " + with_article(b));
          break;
        case BenchCategory::kRel3d:
          push(with_article(a) + " " + std::string(pick(rng, kRel3d)) + " " + with_article(b));
          break;
        case BenchCategory::kImplicit:
          push(with_article(a) + " " + std::string(pick(rng, kImplicit)) + " " + with_article(b));
          break;
        case BenchCategory::kNumeracy:
          break;
      }
    }
  }
  return out;
}

namespace {

constexpr std::string_view kBindingTemplate =
    "Evaluate whether the image matches the following prompt: [PROMPT]\n"
    "\n"
    "Scoring criteria:\n"
    "- 100: All items are recognizable and the binding between items and their attributes is correct.\n"
    "- 50: All items are recognizable, but the binding between items and their attributes is incorrect or unclear.\n"
    "- 30: Items are not recognizable, but the attribute binding appears correct.\n"
    "- 0: Items are not recognizable and the binding between items and their attributes is incorrect.\n"
    "\n"
    "Response format:\n"
    "REASONING: [your reasoning]\n"
    "SCORE: [score]\n";

constexpr std::string_view kRelationTemplate =
    "Evaluate whether the image matches the following prompt: [PROMPT]\n"
    "\n"
    "Scoring criteria:\n"
    "- 100: The items are clear and the relation between items is correct.\n"
    "- 50: The items are not clear, but the relation between items is correct.\n"
    "- 30: The items are clear, but the relation between items is incorrect.\n"
    "- 0: The items are not clear and the relation between items is incorrect.\n"
    "\n"
    "Response format:\n"
    "REASONING: [your reasoning]\n"
    "SCORE: [score]\n";

constexpr std::string_view kTotalTemplate =
    "Evaluate whether the image contains exactly [TOTAL_COUNT] distinct items in total (they do not need "
    "to be recognizable, but should be clearly individual objects).\n"
    "\n"
    "Scoring criteria:\n"
    "- 100: All items in the image are clearly individual objects, and the total count is correct.\n"
    "- 50: All items are clearly individual objects, but the total count is incorrect.\n"
    "- 30: Some items are clearly individual objects, and the total count is incorrect.\n"
    "- 0: The items are not clearly individual objects and the total count is incorrect.\n"
    "\n"
    "Response format:\n"
    "REASONING: [your really brief reasoning]\n"
    "SCORE: [score]\n";

constexpr std::string_view kItemTemplate =
    "Check whether the image contains the following items: [ITEM LIST].\n"
    "\n"
    "Scoring criteria:\n"
    "- 100: The image contains all the items listed above.\n"
    "- 50: The image contains most of the items listed above.\n"
    "- 30: The image contains some of the items listed above.\n"
    "- 0: The image does not contain any of the items listed above.\n"
    "\n"
    "Response format:\n"
    "REASONING: [your really brief reasoning]\n"
    "SCORE: [score]\n";

constexpr std::string_view kCpiTemplate =
    "Evaluate whether the image contains exactly [COUNT] distinct [NOUN] in total.\n"
    "\n"
    "Scoring criteria:\n"
    "- 100: The image contains exactly [COUNT] distinct [NOUN], and they are clearly individual objects.\n"
    "- 50: The image does not contain all the [COUNT] distinct [NOUN], but the count is close to [COUNT].\n"
    "- 30: The image does not contain all the [COUNT] distinct [NOUN], but the count is far from [COUNT].\n"
    "- 0: The image does not contain any of the [COUNT] distinct [NOUN].\n"
    "\n"
    "Response format:\n"
    "REASONING: [your really brief reasoning]\n"
    "SCORE: [score]\n";

std::string substitute(std::string_view tmpl, std::string_view key, std::string_view value) {
  std::string out;
  std::size_t pos = 0;
  while (true) {
    std::size_t hit = tmpl.find(key, pos);
    if (hit == std::string_view::npos) break;
    out.append(tmpl, pos, hit - pos);
    out.append(value);
    pos = hit + key.size();
  }
  out.append(tmpl.substr(pos));
  return out;
}

}  // namespace

std::string judge_prompt_for(const BenchPrompt& prompt, JudgeAspect aspect, std::size_t cpi_index) {
  const auto allowed = aspects_for(prompt.category);
  if (std::find(allowed.begin(), allowed.end(), aspect) == allowed.end())
    throw BenchError("aspect " + to_string(aspect) + " does not apply to a " + to_string(prompt.category) +
                     " prompt");
  switch (aspect) {
    case JudgeAspect::kBinding:
      return substitute(kBindingTemplate, "[PROMPT]", prompt.text);
    case JudgeAspect::kRelation:
      return substitute(kRelationTemplate, "[PROMPT]", prompt.text);
    default:
      break;
  }
  if (!prompt.numeracy_spec || prompt.numeracy_spec->empty())
    throw BenchError("numeracy prompt " + prompt.id + " lacks a numeracy spec");
  const auto& spec = *prompt.numeracy_spec;
  if (aspect == JudgeAspect::kNumTotal) {
    int total = 0;
    for (const auto& e : spec) total += e.second;
    return substitute(kTotalTemplate, "[TOTAL_COUNT]", std::to_string(total));
  }
  if (aspect == JudgeAspect::kNumItem) {
    std::vector<std::string> nouns;
    for (const auto& e : spec) nouns.push_back(e.first);
    return substitute(kItemTemplate, "[ITEM LIST]", join(nouns, ", "));
  }
  if (cpi_index >= spec.size()) throw BenchError("CPI index out of range for prompt " + prompt.id);
  return substitute(substitute(kCpiTemplate, "[COUNT]", std::to_string(spec[cpi_index].second)), "[NOUN]",
                    spec[cpi_index].first);
}

JudgeVerdict parse_verdict(std::string_view reply, bool rubric) {
  std::vector<std::string_view> lines;
  for (std::size_t pos = 0; pos <= reply.size();) {
    std::size_t nl = reply.find('\n', pos);
    if (nl == std::string_view::npos) nl = reply.size();
    lines.push_back(reply.substr(pos, nl - pos));
    pos = nl + 1;
  }
  std::vector<std::size_t> score_lines;
  for (std::size_t i = 0; i < lines.size(); ++i)
    if (trim(lines[i]).starts_with("SCORE:")) score_lines.push_back(i);
  if (score_lines.empty()) throw BenchError("judge reply has no SCORE line");

  JudgeVerdict v;
  if (score_lines.size() > 1)
    v.warnings.push_back(std::to_string(score_lines.size()) + " SCORE lines; the last one was used");
  const std::size_t last = score_lines.back();
  std::string value(trim(trim(lines[last]).substr(6)));
  char* end = nullptr;
  const double score = std::strtod(value.c_str(), &end);
  if (value.empty() || end == value.c_str() || !trim(std::string_view(end)).empty() || !std::isfinite(score))
    throw BenchError("unparseable score '" + value + "'");
  if (score < 0 || score > 100) throw BenchError("score " + value + " is outside [0, 100]");
  if (rubric && score != 0 && score != 30 && score != 50 && score != 100)
    throw BenchError("score " + value + " is not a rubric value");
  v.score = score;

  std::string before;
  for (std::size_t i = 0; i < last; ++i) {
    before.append(lines[i]);
    before.push_back('\n');
  }
  std::size_t r = before.find("REASONING:");
  v.reasoning = std::string(trim(r == std::string::npos ? std::string_view(before)
                                                                 : std::string_view(before).substr(r + 10)));
  return v;
}

void to_json(nlohmann::json& j, const VerdictRecord& v) {
  j = nlohmann::json{{"prompt_id", v.prompt_id},
                     {"category", to_string(v.category)},
                     {"aspect", to_string(v.aspect)},
                     {"score", v.score ? nlohmann::json(*v.score) : nlohmann::json(nullptr)},
                     {"reasoning", v.reasoning}};
  if (v.item) j["item"] = *v.item;
  if (v.error) j["error"] = *v.error;
}

void from_json(const nlohmann::json& j, VerdictRecord& v) {
  v.prompt_id = j.at("prompt_id").get<std::string>();
  v.category = parse_category(j.at("category").get<std::string>());
  v.aspect = parse_aspect(j.at("aspect").get<std::string>());
  v.item = j.contains("item") && !j["item"].is_null() ? std::optional(j["item"].get<std::string>()) : std::nullopt;
  v.score = j.contains("score") && !j["score"].is_null() ? std::optional(j["score"].get<double>()) : std::nullopt;
  v.reasoning = j.value("reasoning", "");
  v.error = j.contains("error") && !j["error"].is_null() ? std::optional(j["error"].get<std::string>()) : std::nullopt;
}

namespace {

using AspectKey = std::pair<BenchCategory, JudgeAspect>;

// Records sorted by prompt id (and item) before any summation, so the result
// does not depend on input order.
CategoryStat stat_for(const std::map<std::string, std::vector<std::pair<std::string, std::optional<double>>>>& by_prompt) {
  CategoryStat s;
  double sum = 0.0;
  for (const auto& [id, entries] : by_prompt) {
    auto sorted = entries;
    std::sort(sorted.begin(), sorted.end());
    double psum = 0.0;
    std::size_t n = 0;
    for (const auto& e : sorted)
      if (e.second) psum += *e.second, ++n;
    if (n == 0) {
      ++s.unjudged;
      continue;
    }
    ++s.judged;
    sum += psum / static_cast<double>(n);
  }
  if (s.judged > 0) s.mean = sum / static_cast<double>(s.judged);
  return s;
}

}  // namespace

CategoryScores aggregate(std::span<const VerdictRecord> verdicts) {
  std::map<AspectKey, std::map<std::string, std::vector<std::pair<std::string, std::optional<double>>>>> groups;
  std::size_t judged_records = 0;
  for (const VerdictRecord& v : verdicts) {
    const auto allowed = aspects_for(v.category);
    if (std::find(allowed.begin(), allowed.end(), v.aspect) == allowed.end())
      throw BenchError("verdict for " + v.prompt_id + " has aspect " + to_string(v.aspect) + " not valid for " +
                       to_string(v.category));
    if (v.score && (*v.score < 0 || *v.score > 100 || !std::isfinite(*v.score)))
      throw BenchError("verdict for " + v.prompt_id + " has out-of-range score");
    groups[{v.category, v.aspect}][v.prompt_id].emplace_back(v.item.value_or(""), v.score);
    if (v.score) ++judged_records;
  }

  auto get = [&](BenchCategory c, JudgeAspect a) {
    auto it = groups.find({c, a});
    CategoryStat s = it == groups.end() ? CategoryStat{} : stat_for(it->second);
    if (s.judged == 0)
      throw BenchError("category " + to_string(c) + " (" + to_string(a) + ") has no judged prompts");
    return s;
  };

  CategoryScores out;
  out.color = get(BenchCategory::kColor, JudgeAspect::kBinding);
  out.shape = get(BenchCategory::kShape, JudgeAspect::kBinding);
  out.texture = get(BenchCategory::kTexture, JudgeAspect::kBinding);
  out.rel2d = get(BenchCategory::kRel2d, JudgeAspect::kRelation);
  out.rel3d = get(BenchCategory::kRel3d, JudgeAspect::kRelation);
  out.implicit = get(BenchCategory::kImplicit, JudgeAspect::kRelation);
  out.num_total = get(BenchCategory::kNumeracy, JudgeAspect::kNumTotal);
  out.num_item = get(BenchCategory::kNumeracy, JudgeAspect::kNumItem);
  out.num_cpi = get(BenchCategory::kNumeracy, JudgeAspect::kNumCpi);
  out.bind_avg = (out.color.mean + out.shape.mean + out.texture.mean) / 3.0;
  out.rel_avg = (out.rel2d.mean + out.rel3d.mean + out.implicit.mean) / 3.0;
  out.numeracy = {out.num_total.mean, out.num_item.mean, out.num_cpi.mean,
                  numeracy_overall(out.num_total.mean, out.num_item.mean, out.num_cpi.mean)};
  out.grand_avg = (out.bind_avg + out.rel_avg + out.numeracy.overall) / 3.0;
  out.coverage = verdicts.empty() ? 0.0 : static_cast<double>(judged_records) / static_cast<double>(verdicts.size());
  return out;
}

namespace {

std::vector<double> table_row(const CategoryScores& s) {
  return {s.color.mean, s.shape.mean, s.texture.mean, s.bind_avg,          s.rel2d.mean,
          s.rel3d.mean, s.implicit.mean, s.rel_avg,   s.numeracy.total,    s.numeracy.item,
          s.numeracy.cpi, s.numeracy.overall, s.grand_avg};
}

constexpr std::array<std::string_view, 13> kColumns = {"Color", "Shape", "Texture", "Avg",   "2D",
                                                       "3D",    "Implicit", "Avg", "Total", "Item",
                                                       "CPI",   "Overall",  "Avg"};

std::string fixed1(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", x);
  return buf;
}

}  // namespace

std::string report_tsv(const CategoryScores& s, std::string_view model_name) {
  std::string out = "Model";
  for (auto c : kColumns) out += "\t" + std::string(c);
  out += "\tCoverage\n" + std::string(model_name);
  for (double x : table_row(s)) out += "\t" + fixed1(x);
  char cov[32];
  std::snprintf(cov, sizeof cov, "\t%.4f\n", s.coverage);
  return out + cov;
}

std::string report_text(const CategoryScores& s, std::string_view model_name) {
  std::ostringstream os;
  const int name_w = static_cast<int>(std::max<std::size_t>(model_name.size(), 5));
  char buf[64];
  auto cell = [&](std::string_view text, int w) {
    std::snprintf(buf, sizeof buf, "%*.*s", w, static_cast<int>(text.size()), text.data());
    return std::string(buf);
  };
  os << cell("", name_w) << " | " << cell("Attribute Binding", 35) << " | " << cell("Spatial Relation", 35)
     << " | " << cell("Numeracy", 35) << " |\n";
  os << cell("Model", name_w) << " |";
  for (std::size_t i = 0; i < kColumns.size(); ++i) {
    os << cell(kColumns[i], 8);
    if (i == 3 || i == 7 || i == 11) os << " |";
  }
  os << "\n" << cell(model_name, name_w) << " |";
  auto row = table_row(s);
  for (std::size_t i = 0; i < row.size(); ++i) {
    os << cell(fixed1(row[i]), 8);
    if (i == 3 || i == 7 || i == 11) os << " |";
  }
  std::snprintf(buf, sizeof buf, "\ncoverage %.1f%%\n", 100.0 * s.coverage);
  os << buf;
  return os.str();
}

double clip_style_score(const std::string& caption, const RasterImage& image,
                        std::span<Embedder* const> embedders) {
  if (embedders.empty()) throw std::invalid_argument("clip_style_score needs at least one embedder");
  double sum = 0.0;
  for (Embedder* e : embedders) sum += cosine(e->embed_text(caption), e->embed_image(image));
  return sum / static_cast<double>(embedders.size());
}

double diversity_from_embeddings(std::span<const std::vector<EmbeddingVector>> per_embedder) {
  if (per_embedder.empty()) throw std::invalid_argument("diversity needs at least one embedder");
  double sum = 0.0;
  std::size_t pairs = 0;
  for (const auto& vecs : per_embedder) {
    if (vecs.size() < 2) throw std::invalid_argument("diversity needs at least two images");
    for (std::size_t i = 0; i < vecs.size(); ++i)
      for (std::size_t j = i + 1; j < vecs.size(); ++j) {
        sum += cosine(vecs[i], vecs[j]);
        ++pairs;
      }
  }
  return 1.0 - sum / static_cast<double>(pairs);
}

double diversity_score(std::span<const RasterImage> images, std::span<Embedder* const> embedders) {
  if (images.size() < 2) throw std::invalid_argument("diversity needs at least two images");
  std::vector<std::vector<EmbeddingVector>> per;
  for (Embedder* e : embedders) per.push_back(e->embed_images(images));
  return diversity_from_embeddings(per);
}

JudgeClient::JudgeClient(std::string endpoint, int timeout_seconds, std::optional<std::string> auth_token)
    : endpoint_(std::move(endpoint)), timeout_seconds_(timeout_seconds), auth_token_(std::move(auth_token)) {}

JudgeVerdict JudgeClient::judge(const std::string& prompt, const RasterImage& image) const {
  ServiceClient client(endpoint_, timeout_seconds_, auth_token_);
  auto png = encode_png(image);
  nlohmann::json reply =
      client.post("/v1/judge", {{"prompt", prompt}, {"image_png_b64", base64_encode(std::string(png.begin(), png.end()))}});
  if (!reply.contains("score") || !reply["score"].is_number()) throw ServiceError("/v1/judge: reply lacks a numeric score");
  JudgeVerdict v;
  v.score = reply["score"].get<double>();
  if (!std::isfinite(v.score) || v.score < 0 || v.score > 100)
    throw ServiceError("/v1/judge: score outside [0, 100]");
  if (reply.contains("reasoning") && reply["reasoning"].is_string()) v.reasoning = reply["reasoning"].get<std::string>();
  return v;
}

}  // namespace sgp
