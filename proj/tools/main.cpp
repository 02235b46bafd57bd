#include <cstdlib>
#include <exception>
#include <iostream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_sinks.h>
#include <spdlog/spdlog.h>

#include "commands.hpp"
#include "sgp/embed.hpp"

using namespace sgp::cli;

namespace {

void setup_logging() {
  auto logger = spdlog::stderr_logger_mt("sgp");
  logger->set_pattern("sgp: %l: %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::warn);
  if (const char* lvl = std::getenv("SGP_LOG"); lvl && *lvl) {
    auto parsed = spdlog::level::from_str(lvl);
    // from_str maps unknown names to off; only accept "off" when spelled out.
    if (parsed == spdlog::level::off && std::string_view(lvl) != "off")
      spdlog::warn("unknown SGP_LOG level '{}', using warn", lvl);
    else
      spdlog::set_level(parsed);
  }
}

void add_jobs(CLI::App* cmd, int& jobs) {
  cmd->add_option("--jobs", jobs, "worker threads, 0 = all cores")->check(CLI::NonNegativeNumber);
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();

  CLI::App app{"SVG generation policy toolkit"};
  app.require_subcommand(1);

  ValidateArgs validate;
  auto* c_validate = app.add_subcommand("validate", "apply the format gate to model responses");
  c_validate->add_option("--in", validate.in, "responses JSONL")->required();
  c_validate->add_option("--out", validate.out, "reports JSONL")->required();
  c_validate->add_option("--size", validate.size, "render size for the renderability check");
  add_jobs(c_validate, validate.jobs);

  RenderArgs render;
  auto* c_render = app.add_subcommand("render", "rasterize an SVG file to PNG");
  c_render->add_option("--in", render.in, "SVG file")->required();
  c_render->add_option("--out", render.out, "PNG file")->required();
  c_render->add_option("--size", render.size, "square output size");
  c_render->add_option("--width", render.width);
  c_render->add_option("--height", render.height);

  ScoreArgs score;
  auto* c_score = app.add_subcommand("score", "compute fused rewards");
  c_score->add_option("--in", score.in, "samples JSONL (response, caption, optional ref_image)")->required();
  c_score->add_option("--out", score.out, "RewardBreakdown JSONL")->required();
  auto* mock = c_score->add_flag("--mock-embedder", score.service.mock, "use the offline reference embedder");
  auto* url = c_score->add_option("--service-url", score.service.url, "scoring service, e.g. http://127.0.0.1:8000");
  mock->excludes(url);
  c_score->add_option("--model-tag", score.service.model_tag);
  c_score->add_option("--timeout", score.service.timeout, "seconds per request");
  c_score->add_option("--max-batch", score.service.max_batch);
  c_score->add_option("--max-in-flight", score.service.max_in_flight);
  c_score->add_option("--lambda-text", score.lambda_text);
  c_score->add_option("--lambda-image", score.lambda_image);
  c_score->add_option("--size", score.size, "render size");
  add_jobs(c_score, score.jobs);

  TrainToyArgs toy;
  auto* c_toy = app.add_subcommand("train-toy", "run GRPO on the toy color/shape task");
  c_toy->add_option("--seed", toy.seed);
  c_toy->add_option("--iters", toy.iters);
  c_toy->add_option("--group-size", toy.group_size);
  c_toy->add_option("--lr", toy.lr);
  c_toy->add_option("--epochs", toy.epochs);
  c_toy->add_option("--clip-low", toy.clip.clip_low);
  c_toy->add_option("--clip-high", toy.clip.clip_high);
  c_toy->add_option("--format-prior", toy.format_prior);
  c_toy->add_option("--render-size", toy.render_size);
  c_toy->add_option("--trace", toy.trace, "trace JSONL")->required();
  c_toy->add_option("--snapshot", toy.snapshot, "policy snapshot file")->required();
  add_jobs(c_toy, toy.jobs);

  auto* c_bench = app.add_subcommand("bench", "compositional benchmark");
  c_bench->require_subcommand(1);
  BenchGenArgs gen;
  auto* c_gen = c_bench->add_subcommand("gen", "generate prompts");
  c_gen->add_option("--seed", gen.seed)->required();
  c_gen->add_option("--out", gen.out)->required();
  c_gen->add_option("--per-subcategory", gen.per_subcategory);
  c_gen->add_option("--numeracy-per-count", gen.numeracy_per_count);
  BenchJudgeArgs judge;
  auto* c_judge = c_bench->add_subcommand("judge", "score responses with the judge service");
  c_judge->add_option("--prompts", judge.prompts)->required();
  c_judge->add_option("--responses", judge.responses, "JSONL with prompt_id and response")->required();
  c_judge->add_option("--out", judge.out, "verdicts JSONL")->required();
  c_judge->add_option("--service-url", judge.url);
  c_judge->add_option("--timeout", judge.timeout);
  c_judge->add_option("--size", judge.size);
  add_jobs(c_judge, judge.jobs);
  BenchReportArgs report;
  auto* c_report = c_bench->add_subcommand("report", "aggregate verdicts into a table");
  c_report->add_option("--verdicts", report.verdicts)->required();
  c_report->add_option("--model", report.model);
  c_report->add_option("--tsv", report.tsv);

  auto* c_analyze = app.add_subcommand("analyze", "code statistics and best-of-N");
  c_analyze->require_subcommand(1);
  AnalyzeStatsArgs stats;
  auto* c_stats = c_analyze->add_subcommand("stats", "per-record SVG code statistics");
  c_stats->add_option("--in", stats.in)->required();
  c_stats->add_option("--out", stats.out, "TSV")->required();
  AnalyzeBonArgs bon;
  auto* c_bon = c_analyze->add_subcommand("bon", "best-of-N curve");
  c_bon->add_option("--in", bon.in, "scored JSONL with prompt_id")->required();
  c_bon->add_option("--out", bon.out, "TSV")->required();
  c_bon->add_option("--baseline", bon.baseline, "scored JSONL of the baseline model");
  c_bon->add_option("--plot", bon.plot, "SVG line chart");
  c_bon->add_option("--n", bon.n_values, "N values, default powers of two up to k")->delimiter(',');
  c_bon->add_option("--score-field", bon.score_field);
  add_jobs(c_bon, bon.jobs);

  auto* c_corpus = app.add_subcommand("corpus", "training corpus curation");
  c_corpus->require_subcommand(1);
  CorpusFilterArgs filter;
  auto* c_filter = c_corpus->add_subcommand("filter", "drop records with text content");
  c_filter->add_option("--in", filter.in)->required();
  c_filter->add_option("--out", filter.out)->required();
  c_filter->add_option("--dropped", filter.dropped, "write dropped records with drop_reason");
  c_filter->add_option("--keywords", filter.keywords, "'default' or a file with one word per line");
  CorpusMixArgs mixa;
  auto* c_mix = c_corpus->add_subcommand("mix", "sample a weighted mixture of sources");
  c_mix->add_option("--in", mixa.in, "source JSONL, repeatable")->required();
  c_mix->add_option("--weights", mixa.weights)->delimiter(',')->required();
  c_mix->add_option("--target", mixa.target)->required();
  c_mix->add_option("--seed", mixa.seed)->required();
  c_mix->add_option("--out", mixa.out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (c_validate->parsed()) return run_validate(validate);
    if (c_render->parsed()) return run_render(render);
    if (c_score->parsed()) {
      if (!score.service.mock && !score.service.url && !std::getenv("SGP_SERVICE_URL")) {
        std::cerr << "score needs exactly one of --mock-embedder or --service-url\n\n" << c_score->help();
        return 1;
      }
      return run_score(score);
    }
    if (c_toy->parsed()) return run_train_toy(toy);
    if (c_gen->parsed()) return run_bench_gen(gen);
    if (c_judge->parsed()) return run_bench_judge(judge);
    if (c_report->parsed()) return run_bench_report(report);
    if (c_stats->parsed()) return run_analyze_stats(stats);
    if (c_bon->parsed()) return run_analyze_bon(bon);
    if (c_filter->parsed()) return run_corpus_filter(filter);
    if (c_mix->parsed()) return run_corpus_mix(mixa);
  } catch (const sgp::ServiceError& e) {
    spdlog::error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 1;
}
