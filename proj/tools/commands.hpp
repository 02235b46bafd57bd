#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "sgp/grpo.hpp"

namespace sgp::cli {

// Thrown for bad flag combinations and malformed inputs that the library does
// not already reject; maps to exit code 1.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Every command returns the process exit code.

struct ValidateArgs {
  std::string in, out;
  int size = 384;
  int jobs = 0;
};
int run_validate(const ValidateArgs& a);

struct RenderArgs {
  std::string in, out;
  int size = 384;
  std::optional<int> width, height;
};
int run_render(const RenderArgs& a);

struct ServiceArgs {
  std::optional<std::string> url;
  bool mock = false;
  std::string model_tag = "default";
  int timeout = 60;
  std::size_t max_batch = 32;
  std::size_t max_in_flight = 4;
};

struct ScoreArgs {
  std::string in, out;
  ServiceArgs service;
  double lambda_text = 1.0;
  double lambda_image = 0.0;
  int size = 384;
  int jobs = 0;
};
int run_score(const ScoreArgs& a);

struct TrainToyArgs {
  std::uint64_t seed = 17;
  int iters = 200;
  int group_size = 8;
  double lr = 1e-2;
  int epochs = 4;
  ClipConfig clip;
  double format_prior = 0.75;
  int render_size = 32;
  std::string trace, snapshot;
  int jobs = 0;
};
int run_train_toy(const TrainToyArgs& a);

struct BenchGenArgs {
  std::uint64_t seed = 0;
  std::string out;
  int per_subcategory = 400;
  int numeracy_per_count = 100;
};
int run_bench_gen(const BenchGenArgs& a);

struct BenchJudgeArgs {
  std::string prompts, responses, out;
  std::optional<std::string> url;
  int timeout = 60;
  int size = 384;
  int jobs = 0;
};
int run_bench_judge(const BenchJudgeArgs& a);

struct BenchReportArgs {
  std::string verdicts;
  std::string model = "model";
  std::optional<std::string> tsv;
};
int run_bench_report(const BenchReportArgs& a);

struct AnalyzeStatsArgs {
  std::string in, out;
};
int run_analyze_stats(const AnalyzeStatsArgs& a);

struct AnalyzeBonArgs {
  std::string in, out;
  std::optional<std::string> baseline, plot;
  std::vector<std::size_t> n_values;
  std::string score_field = "fused";
  int jobs = 0;
};
int run_analyze_bon(const AnalyzeBonArgs& a);

struct CorpusFilterArgs {
  std::string in, out;
  std::optional<std::string> dropped;
  std::string keywords = "default";
};
int run_corpus_filter(const CorpusFilterArgs& a);

struct CorpusMixArgs {
  std::vector<std::string> in;
  std::vector<double> weights;
  std::size_t target = 0;
  std::uint64_t seed = 0;
  std::string out;
};
int run_corpus_mix(const CorpusMixArgs& a);

}  // namespace sgp::cli
