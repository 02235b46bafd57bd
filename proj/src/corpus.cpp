#include "sgp/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <numeric>

#include "sgp/io.hpp"
#include "sgp/response.hpp"
#include "sgp/rng.hpp"

namespace sgp {

namespace {

const char* const kKnownFields[] = {"id", "caption", "svg_source", "ref_image_path", "source_tag", "contains_text"};

std::optional<std::string> optional_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw CorpusError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

}  // namespace

void to_json(nlohmann::json& j, const CorpusRecord& r) {
  j = r.extra.is_object() ? r.extra : nlohmann::json::object();
  j["id"] = r.id;
  j["caption"] = r.caption;
  if (r.svg_source) j["svg_source"] = *r.svg_source;
  if (r.ref_image_path) j["ref_image_path"] = *r.ref_image_path;
  j["source_tag"] = r.source_tag;
  if (r.contains_text) j["contains_text"] = *r.contains_text;
}

void from_json(const nlohmann::json& j, CorpusRecord& r) {
  if (!j.is_object()) throw CorpusError("corpus record must be a JSON object");
  r = CorpusRecord{};
  if (!j.contains("id") || j["id"].is_null()) throw CorpusError("corpus record has no id");
  r.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
  r.caption = optional_string(j, "caption").value_or("");
  r.svg_source = optional_string(j, "svg_source");
  r.ref_image_path = optional_string(j, "ref_image_path");
  r.source_tag = optional_string(j, "source_tag").value_or("");
  if (j.contains("contains_text") && !j["contains_text"].is_null()) {
    const auto& v = j["contains_text"];
    if (v.is_boolean())
      r.contains_text = v.get<bool>();
    else if (v.is_string() && (v == "Yes" || v == "yes"))
      r.contains_text = true;
    else if (v.is_string() && (v == "No" || v == "no"))
      r.contains_text = false;
    else
      throw CorpusError("field 'contains_text' must be a boolean or Yes/No");
  }
  if (r.caption.empty() && !r.svg_source && !r.ref_image_path)
    throw CorpusError("record needs a caption, svg_source or ref_image_path");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (std::none_of(std::begin(kKnownFields), std::end(kKnownFields), [&](const char* k) { return it.key() == k; }))
      r.extra[it.key()] = it.value();
}

std::vector<CorpusRecord> load_corpus(const std::filesystem::path& path) {
  std::vector<CorpusRecord> out;
  for_each_jsonl(path, [&](nlohmann::json&& v, std::size_t) { out.push_back(v.get<CorpusRecord>()); });
  return out;
}

void write_corpus(const std::filesystem::path& path, std::span<const CorpusRecord> records) {
  std::string body;
  for (const auto& r : records) {
    body += nlohmann::json(r).dump();
    body += '\n';
  }
  write_file_atomic(path, body);
}

const std::vector<std::string>& default_text_keywords() {
  static const std::vector<std::string> words = {
      "text",  "word",   "letter", "character", "symbol",    "number", "digit",  "font",  "script",
      "write", "written", "writing", "typography", "label", "caption", "title", "name",  "sign",
      "signature", "logo", "slogan", "spell", "phrase", "quote", "message"};
  return words;
}

namespace {

// Decodes one UTF-8 code point; invalid bytes decode as U+FFFD and advance by one.
char32_t next_code_point(std::string_view s, std::size_t& i) {
  const unsigned char c = static_cast<unsigned char>(s[i]);
  int len = c < 0x80 ? 1 : (c >> 5) == 0x6 ? 2 : (c >> 4) == 0xE ? 3 : (c >> 3) == 0x1E ? 4 : 0;
  if (len == 0 || i + len > s.size()) {
    ++i;
    return 0xFFFD;
  }
  char32_t cp = len == 1 ? c : c & (0x7F >> len);
  for (int k = 1; k < len; ++k) {
    const unsigned char cc = static_cast<unsigned char>(s[i + k]);
    if ((cc & 0xC0) != 0x80) {
      ++i;
      return 0xFFFD;
    }
    cp = (cp << 6) | (cc & 0x3F);
  }
  i += len;
  return cp;
}

bool is_word_code_point(char32_t cp) {
  if (cp < 0x80) return (cp >= '0' && cp <= '9') || (cp >= 'a' && cp <= 'z') || (cp >= 'A' && cp <= 'Z');
  // Latin-1 punctuation and symbols, the general punctuation block, CJK
  // punctuation, fullwidth ASCII punctuation, and replacement characters.
  if (cp <= 0xBF || cp == 0xD7 || cp == 0xF7) return false;
  if (cp >= 0x2000 && cp <= 0x206F) return false;
  if (cp >= 0x3000 && cp <= 0x303F) return false;
  if ((cp >= 0xFF00 && cp <= 0xFF0F) || (cp >= 0xFF1A && cp <= 0xFF20)) return false;
  if (cp == 0xFEFF || cp == 0xFFFD) return false;
  return true;
}

}  // namespace

std::vector<std::string> caption_words(std::string_view caption) {
  std::vector<std::string> words;
  std::string current;
  for (std::size_t i = 0; i < caption.size();) {
    const std::size_t start = i;
    const char32_t cp = next_code_point(caption, i);
    if (is_word_code_point(cp)) {
      if (cp < 0x80)
        current.push_back(static_cast<char>(std::tolower(static_cast<int>(cp))));
      else
        current.append(caption.substr(start, i - start));
    } else if (!current.empty()) {
      words.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) words.push_back(std::move(current));
  return words;
}

FilterDecision filter_text_content(const CorpusRecord& record, std::span<const std::string> keywords) {
  if (record.svg_source)
    if (auto tag = check_banned_tags(*record.svg_source)) return {false, "tag:" + *tag};
  std::vector<std::string> hits;
  const auto words = caption_words(record.caption);
  for (const std::string& k : keywords) {
    std::string lk;
    for (char ch : k) lk.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
    if (std::find(words.begin(), words.end(), lk) != words.end() &&
        std::find(hits.begin(), hits.end(), lk) == hits.end())
      hits.push_back(lk);
  }
  if (!hits.empty()) {
    std::string reason = "keyword:";
    for (std::size_t i = 0; i < hits.size(); ++i) reason += (i ? "," : "") + hits[i];
    return {false, reason};
  }
  if (record.contains_text.value_or(false)) return {false, "contains_text"};
  return {};
}

std::vector<std::size_t> mix_quotas(std::span<const double> weights, std::size_t target) {
  if (weights.empty()) throw CorpusError("mix needs at least one source");
  double sum = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw CorpusError("mix weights must be finite and non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw CorpusError("mix weights must sum to 1");
  std::vector<std::size_t> quota(weights.size());
  std::vector<double> remainder(weights.size());
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    const double exact = weights[i] * static_cast<double>(target);
    quota[i] = static_cast<std::size_t>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(quota[i]);
    assigned += quota[i];
  }
  std::vector<std::size_t> order(weights.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t k = 0; assigned < target; k = (k + 1) % order.size()) {
    if (weights[order[k]] > 0.0 || std::all_of(weights.begin(), weights.end(), [](double w) { return w == 0.0; })) {
      ++quota[order[k]];
      ++assigned;
    }
  }
  while (assigned > target) {
    // Rounding pushed a floor above the exact share; take back from the smallest remainder.
    for (auto it = order.rbegin(); it != order.rend() && assigned > target; ++it)
      if (quota[*it] > 0) --quota[*it], --assigned;
  }
  return quota;
}

std::vector<CorpusRecord> mix(std::span<const MixSource> sources, std::size_t target_size, std::uint64_t seed) {
  std::vector<double> weights;
  for (const auto& s : sources) weights.push_back(s.weight);
  const auto quota = mix_quotas(weights, target_size);
  std::vector<CorpusRecord> out;
  out.reserve(target_size);
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto& records = sources[s].records;
    if (records.size() < quota[s])
      throw CorpusError("source " + std::to_string(s) + " has " + std::to_string(records.size()) +
                        " records but its quota is " + std::to_string(quota[s]));
    std::mt19937_64 rng = stream_rng(seed, 0x6d6978ULL, s);
    std::vector<std::size_t> idx(records.size());
    std::iota(idx.begin(), idx.end(), 0);
    for (std::size_t i = 0; i < quota[s]; ++i) {
      std::swap(idx[i], idx[i + uniform_index(rng, idx.size() - i)]);
      out.push_back(records[idx[i]]);
    }
  }
  return out;
}

}  // namespace sgp
