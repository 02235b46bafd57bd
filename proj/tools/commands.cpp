#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <sstream>

#include <spdlog/spdlog.h>

#include "sgp/analysis.hpp"
#include "sgp/bench.hpp"
#include "sgp/corpus.hpp"
#include "sgp/embed.hpp"
#include "sgp/io.hpp"
#include "sgp/parallel.hpp"
#include "sgp/parallel_for.hpp"
#include "sgp/png.hpp"
#include "sgp/raster.hpp"
#include "sgp/response.hpp"
#include "sgp/reward.hpp"
#include "sgp/service_client.hpp"
#include "sgp/toy.hpp"

namespace sgp::cli {

namespace {

using nlohmann::json;

std::string num(double v) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

std::string string_field(const json& j, std::initializer_list<const char*> keys) {
  if (!j.is_object()) throw UsageError("record must be a JSON object");
  for (const char* k : keys)
    if (j.contains(k)) {
      if (!j[k].is_string()) throw UsageError(std::string("field '") + k + "' must be a string");
      return j[k].get<std::string>();
    }
  throw UsageError(std::string("missing field '") + *keys.begin() + "'");
}

std::optional<std::string> optional_string(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  if (!j[key].is_string()) throw UsageError(std::string("field '") + key + "' must be a string");
  return j[key].get<std::string>();
}

std::optional<std::string> env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

std::string resolve_url(const std::optional<std::string>& flag) {
  if (flag) return *flag;
  if (auto e = env("SGP_SERVICE_URL")) return *e;
  throw UsageError("no service endpoint: pass --service-url or set SGP_SERVICE_URL");
}

void require_healthy(const std::string& url, int timeout) {
  ServiceClient client(url, timeout, env("SGP_SERVICE_TOKEN"));
  if (!client.healthy()) throw ServiceError("service at " + url + " is not healthy");
}

RenderConfig square(int size) {
  if (size <= 0) throw UsageError("--size must be positive");
  RenderConfig cfg;
  cfg.out_width = cfg.out_height = size;
  return cfg;
}

}  // namespace

int run_validate(const ValidateArgs& a) {
  std::vector<std::string> responses;
  for_each_jsonl(a.in, [&](json&& j, std::size_t) { responses.push_back(string_field(j, {"response", "raw_text"})); });
  const auto reports = validate_batch_omp(responses, square(a.size), a.jobs);
  std::string body;
  std::size_t passed = 0;
  for (const auto& r : reports) {
    body += json(r).dump() + '\n';
    passed += r.fmt_reward;
  }
  write_file_atomic(a.out, body);
  spdlog::info("validated {} responses, {} pass the format gate", reports.size(), passed);
  return 0;
}

int run_render(const RenderArgs& a) {
  RenderConfig cfg = square(a.size);
  if (a.width) cfg.out_width = *a.width;
  if (a.height) cfg.out_height = *a.height;
  if (cfg.out_width <= 0 || cfg.out_height <= 0) throw UsageError("output size must be positive");
  const RasterImage image = render(parse_svg(read_file(a.in)), cfg);
  const auto png = encode_png(image);
  write_file_atomic(a.out, std::string_view(reinterpret_cast<const char*>(png.data()), png.size()));
  return 0;
}

int run_score(const ScoreArgs& a) {
  if (a.service.mock && a.service.url) throw UsageError("--mock-embedder and --service-url are exclusive");
  if (a.lambda_text < 0 || a.lambda_image < 0) throw UsageError("weights must be non-negative");

  std::vector<ScoreItem> items;
  std::vector<std::optional<json>> ids;
  for_each_jsonl(a.in, [&](json&& j, std::size_t) {
    ScoreItem item;
    item.response = string_field(j, {"response", "raw_text"});
    item.caption = string_field(j, {"caption"});
    auto ref = optional_string(j, "ref_image");
    if (!ref) ref = optional_string(j, "ref_image_path");
    if (ref) item.reference = read_png_file(*ref);
    ids.push_back(j.contains("id") ? std::optional<json>(j["id"]) : std::nullopt);
    items.push_back(std::move(item));
  });

  std::unique_ptr<Embedder> embedder;
  if (a.service.mock) {
    embedder = std::make_unique<ReferenceEmbedder>();
  } else {
    const std::string url = resolve_url(a.service.url);
    require_healthy(url, a.service.timeout);
    RemoteOptions opts;
    opts.max_batch = a.service.max_batch;
    opts.max_in_flight = a.service.max_in_flight;
    opts.timeout_seconds = a.service.timeout;
    opts.auth_token = env("SGP_SERVICE_TOKEN");
    embedder = std::make_unique<RemoteEmbedder>(url, a.service.model_tag, opts);
  }

  const RewardEmbedders embedders{embedder.get(), embedder.get()};
  const auto out = score_batch_omp(items, {a.lambda_text, a.lambda_image}, embedders, square(a.size), a.jobs);

  std::string body;
  std::size_t errored = 0;
  for (std::size_t i = 0; i < out.size(); ++i) {
    json j = out[i];
    if (ids[i]) j["id"] = *ids[i];
    body += j.dump() + '\n';
    if (out[i].errored()) {
      ++errored;
      spdlog::error("sample {}: {}", i, *out[i].error);
    }
  }
  write_file_atomic(a.out, body);
  if (errored) {
    spdlog::error("{} of {} samples failed in the scoring service", errored, out.size());
    return 2;
  }
  return 0;
}

int run_train_toy(const TrainToyArgs& a) {
  if (a.iters < 0 || a.group_size < 2 || a.epochs < 1 || !(a.lr > 0) || a.render_size <= 0)
    throw UsageError("need iters >= 0, group size >= 2, epochs >= 1, lr > 0, render size > 0");
  if (!(a.clip.clip_low > 0 && a.clip.clip_low < 1 && a.clip.clip_high > 0))
    throw UsageError("clip bounds must satisfy 0 < low < 1 and high > 0");
  ToyTrainConfig cfg;
  cfg.iters = a.iters;
  cfg.group_size = a.group_size;
  cfg.lr = a.lr;
  cfg.epochs = a.epochs;
  cfg.clip = a.clip;
  cfg.seed = a.seed;
  cfg.format_prior = a.format_prior;
  cfg.jobs = a.jobs;
  const ToyGrammar grammar = ToyGrammar::color_shape();
  const auto result = train_toy(grammar, cfg, reference_toy_reward(a.render_size));

  std::string body;
  for (const auto& r : result.trace) body += json(r).dump() + '\n';
  write_file_atomic(a.trace, body);
  save_policy(a.snapshot, result.policy);

  const auto& first = result.trace.front();
  const auto& last = result.trace.back();
  std::cout << "iter " << first.iter << ": mean_reward " << num(first.mean_reward) << " fmt_rate "
            << num(first.fmt_rate) << " entropy " << num(first.entropy) << '\n'
            << "iter " << last.iter << ": mean_reward " << num(last.mean_reward) << " fmt_rate "
            << num(last.fmt_rate) << " entropy " << num(last.entropy) << '\n';
  return 0;
}

int run_bench_gen(const BenchGenArgs& a) {
  if (a.per_subcategory < 0 || a.numeracy_per_count < 0) throw UsageError("counts must be non-negative");
  const auto prompts = generate_compbench(a.seed, {a.per_subcategory, a.numeracy_per_count});
  std::string body;
  for (const auto& p : prompts) body += json(p).dump() + '\n';
  write_file_atomic(a.out, body);
  spdlog::info("wrote {} prompts", prompts.size());
  return 0;
}

int run_bench_judge(const BenchJudgeArgs& a) {
  std::vector<BenchPrompt> prompts;
  for_each_jsonl(a.prompts, [&](json&& j, std::size_t) { prompts.push_back(j.get<BenchPrompt>()); });
  std::map<std::string, std::string> responses;
  for_each_jsonl(a.responses, [&](json&& j, std::size_t) {
    responses.emplace(string_field(j, {"prompt_id", "id"}), string_field(j, {"response", "raw_text"}));
  });

  const std::string url = resolve_url(a.url);
  require_healthy(url, a.timeout);
  const JudgeClient judge(url, a.timeout, env("SGP_SERVICE_TOKEN"));
  const int threads = resolve_jobs(a.jobs);

  // Responses that fail the format gate have nothing faithful to judge and score 0.
  const Renderer renderer = make_renderer(square(a.size));
  std::vector<std::optional<RasterImage>> images(prompts.size());
  std::vector<std::optional<std::string>> missing(prompts.size());
  parallel_for(prompts.size(), threads, [&](std::size_t i) {
    auto it = responses.find(prompts[i].id);
    if (it == responses.end()) {
      missing[i] = "no response for prompt";
      return;
    }
    auto result = validate_detailed(it->second, renderer);
    if (result.report.fmt_reward == 1) images[i] = std::move(result.image);
  });

  struct Unit {
    std::size_t prompt;
    std::string text;
  };
  std::vector<Unit> units;
  std::vector<VerdictRecord> records;
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const BenchPrompt& p = prompts[i];
    for (JudgeAspect aspect : aspects_for(p.category)) {
      const std::size_t items = aspect == JudgeAspect::kNumCpi && p.numeracy_spec ? p.numeracy_spec->size() : 1;
      for (std::size_t k = 0; k < items; ++k) {
        VerdictRecord r;
        r.prompt_id = p.id;
        r.category = p.category;
        r.aspect = aspect;
        if (aspect == JudgeAspect::kNumCpi) r.item = (*p.numeracy_spec)[k].first;
        if (missing[i]) {
          r.error = missing[i];
        } else if (!images[i]) {
          r.score = 0.0;
          r.reasoning = "response failed the format gate";
        }
        units.push_back({i, judge_prompt_for(p, aspect, k)});
        records.push_back(std::move(r));
      }
    }
  }

  std::atomic<std::size_t> failures{0};
  parallel_for(units.size(), threads, [&](std::size_t u) {
    VerdictRecord& r = records[u];
    if (r.score || r.error) return;
    try {
      auto v = judge.judge(units[u].text, *images[units[u].prompt]);
      r.score = v.score;
      r.reasoning = std::move(v.reasoning);
    } catch (const ServiceError& e) {
      r.error = e.what();
      ++failures;
    }
  });

  std::string body;
  for (const auto& r : records) body += json(r).dump() + '\n';
  write_file_atomic(a.out, body);
  if (failures) {
    spdlog::error("{} of {} judge requests failed", failures.load(), records.size());
    return 2;
  }
  return 0;
}

int run_bench_report(const BenchReportArgs& a) {
  std::vector<VerdictRecord> verdicts;
  for_each_jsonl(a.verdicts, [&](json&& j, std::size_t) { verdicts.push_back(j.get<VerdictRecord>()); });
  const CategoryScores scores = aggregate(verdicts);
  if (a.tsv) write_file_atomic(*a.tsv, report_tsv(scores, a.model));
  std::cout << report_text(scores, a.model);
  return 0;
}

int run_analyze_stats(const AnalyzeStatsArgs& a) {
  static const char* const kKinds[] = {"rect", "circle", "ellipse", "line", "polyline", "polygon", "path"};
  std::string body = "id\tstep\tparse_ok\telement_count\tcode_length\tcomment_count\toptional_comment_count\t"
                     "comment_ratio\toptional_ratio";
  for (const char* k : kKinds) body += std::string("\t") + k;
  body += '\n';
  std::size_t failed = 0;
  for_each_jsonl(a.in, [&](json&& j, std::size_t line) {
    std::string source;
    if (auto svg = optional_string(j, "svg"))
      source = *svg;
    else if (auto s = optional_string(j, "svg_source"))
      source = *s;
    else {
      // Model responses carry the SVG inside the answer block.
      const auto r = extract_response(string_field(j, {"response", "raw_text"}));
      source = r.answer.value_or("");
    }
    std::string id = j.contains("id") ? (j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump())
                                      : std::to_string(line);
    std::string step = j.contains("step") ? j["step"].dump() : "";
    CodeStats s;
    bool ok = true;
    try {
      s = code_stats(source);
    } catch (const ParseError& e) {
      ok = false;
      ++failed;
      spdlog::warn("line {}: {}", line, e.what());
    }
    body += id + '\t' + step + '\t' + (ok ? "1" : "0") + '\t' + std::to_string(s.element_count) + '\t' +
            std::to_string(s.code_length) + '\t' + std::to_string(s.comment_count) + '\t' +
            std::to_string(s.optional_comment_count) + '\t' + num(s.comment_ratio()) + '\t' +
            num(s.optional_ratio());
    for (const char* k : kKinds) {
      auto it = s.element_histogram.find(k);
      body += '\t' + std::to_string(it == s.element_histogram.end() ? 0 : it->second);
    }
    body += '\n';
  });
  write_file_atomic(a.out, body);
  if (failed) spdlog::warn("{} records did not parse", failed);
  return 0;
}

namespace {

std::vector<std::vector<double>> load_score_table(const std::string& path, const std::string& field) {
  std::map<std::string, std::vector<double>> by_prompt;
  std::size_t skipped = 0;
  for_each_jsonl(path, [&](json&& j, std::size_t) {
    const std::string id = string_field(j, {"prompt_id"});
    if (!j.contains(field)) throw UsageError("missing field '" + field + "'");
    if (j[field].is_null() || (j.contains("error") && !j["error"].is_null())) {
      ++skipped;
      return;
    }
    if (!j[field].is_number()) throw UsageError("field '" + field + "' must be a number");
    by_prompt[id].push_back(j[field].get<double>());
  });
  if (skipped) spdlog::warn("{}: skipped {} unscored records", path, skipped);
  if (by_prompt.empty()) throw UsageError(path + ": no scored records");
  std::vector<std::vector<double>> table;
  for (auto& [id, scores] : by_prompt) table.push_back(std::move(scores));
  return table;
}

std::vector<std::size_t> default_n_values(const std::vector<std::vector<double>>& table) {
  std::size_t k = table.front().size();
  for (const auto& s : table) k = std::min(k, s.size());
  std::vector<std::size_t> n;
  for (std::size_t v = 1; v <= k; v *= 2) n.push_back(v);
  if (n.back() != k) n.push_back(k);
  return n;
}

}  // namespace

int run_analyze_bon(const AnalyzeBonArgs& a) {
  const auto table = load_score_table(a.in, a.score_field);
  const auto n_values = a.n_values.empty() ? default_n_values(table) : a.n_values;
  if (n_values.empty() || std::find(n_values.begin(), n_values.end(), 0) != n_values.end())
    throw UsageError("--n values must be positive");
  const std::size_t max_n = *std::max_element(n_values.begin(), n_values.end());
  for (const auto& s : table)
    if (s.size() < max_n)
      throw UsageError("every prompt needs at least max(N) scores; some prompt has " + std::to_string(s.size()));
  const BonCurve curve = bon_curve_omp(table, n_values, a.jobs);

  std::optional<BonCurve> base;
  if (a.baseline) {
    const auto btable = load_score_table(*a.baseline, a.score_field);
    for (const auto& s : btable)
      if (s.size() < max_n)
        throw UsageError("baseline prompt has too few scores for max(N)");
    base = bon_curve_omp(btable, n_values, a.jobs);
  }

  std::string body = base ? "n\tscore\tbaseline\tdelta\n" : "n\tscore\n";
  for (std::size_t i = 0; i < curve.n_values.size(); ++i) {
    body += std::to_string(curve.n_values[i]) + '\t' + num(curve.scores[i]);
    if (base) body += '\t' + num(base->scores[i]) + '\t' + num(curve.scores[i] - base->scores[i]);
    body += '\n';
  }
  write_file_atomic(a.out, body);

  if (base) {
    const GapFit fit = bon_gap_fit(curve, *base);
    std::cout << "gap fit: slope " << num(fit.slope) << " intercept " << num(fit.intercept) << " status "
              << to_string(fit.status);
    if (fit.n_star) std::cout << " n_star " << num(*fit.n_star);
    std::cout << '\n';
  }
  if (a.plot) {
    std::vector<PlotSeries> series{{"model", "#1f77b4", curve}};
    if (base) series.push_back({"baseline", "#7f7f7f", *base});
    write_file_atomic(*a.plot, bon_plot_svg(series));
  }
  return 0;
}

int run_corpus_filter(const CorpusFilterArgs& a) {
  std::vector<std::string> keywords;
  if (a.keywords == "default") {
    keywords = default_text_keywords();
  } else {
    std::istringstream in(read_file(a.keywords));
    for (std::string line; std::getline(in, line);) {
      while (!line.empty() && (line.back() == '\r' || line.back() == ' ')) line.pop_back();
      if (!line.empty() && line[0] != '#') keywords.push_back(line);
    }
  }
  std::vector<CorpusRecord> kept, dropped;
  for (auto& r : load_corpus(a.in)) {
    const FilterDecision d = filter_text_content(r, keywords);
    if (d.keep) {
      kept.push_back(std::move(r));
    } else {
      r.extra["drop_reason"] = d.reason;
      dropped.push_back(std::move(r));
    }
  }
  write_corpus(a.out, kept);
  if (a.dropped) write_corpus(*a.dropped, dropped);
  std::cout << "kept " << kept.size() << " dropped " << dropped.size() << '\n';
  return 0;
}

int run_corpus_mix(const CorpusMixArgs& a) {
  if (a.in.size() != a.weights.size())
    throw UsageError("need one weight per --in source (" + std::to_string(a.in.size()) + " sources, " +
                     std::to_string(a.weights.size()) + " weights)");
  std::vector<std::vector<CorpusRecord>> corpora;
  for (const auto& path : a.in) corpora.push_back(load_corpus(path));
  std::vector<MixSource> sources;
  for (std::size_t i = 0; i < corpora.size(); ++i) sources.push_back({corpora[i], a.weights[i]});
  const auto mixed = mix(sources, a.target, a.seed);
  write_corpus(a.out, mixed);
  const auto quotas = mix_quotas(a.weights, a.target);
  for (std::size_t i = 0; i < quotas.size(); ++i) std::cout << a.in[i] << '\t' << quotas[i] << '\n';
  return 0;
}

}  // namespace sgp::cli
