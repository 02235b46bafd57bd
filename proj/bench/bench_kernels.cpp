// Serial reference vs OpenMP kernels on the same inputs. Arg(0) is serial,
// anything else is the thread count for the OpenMP version.

#include <benchmark/benchmark.h>

#include "sgp/parallel.hpp"
#include "sgp/rng.hpp"
#include "support.hpp"

using namespace sgp;

namespace {

const std::vector<std::string>& documents() {
  static const std::vector<std::string> docs = [] {
    std::mt19937_64 rng(11);
    std::vector<std::string> out;
    for (int i = 0; i < 256; ++i) out.push_back(test::random_document(rng).source());
    return out;
  }();
  return docs;
}

const std::vector<std::string>& responses() {
  static const std::vector<std::string> r = [] {
    std::vector<std::string> out;
    for (const auto& d : documents()) out.push_back("<THINK>plan</THINK><ANSWER>" + d + "</ANSWER>");
    return out;
  }();
  return r;
}

RenderConfig config() {
  RenderConfig cfg;
  cfg.out_width = cfg.out_height = 128;
  return cfg;
}

void BM_validate(benchmark::State& state) {
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto out = jobs == 0 ? validate_batch_serial(responses(), config()) : validate_batch_omp(responses(), config(), jobs);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * responses().size());
}

void BM_render(benchmark::State& state) {
  const int jobs = static_cast<int>(state.range(0));
  for (auto _ : state) {
    auto out = jobs == 0 ? render_batch_serial(documents(), config()) : render_batch_omp(documents(), config(), jobs);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * documents().size());
}

void BM_score(benchmark::State& state) {
  const int jobs = static_cast<int>(state.range(0));
  std::vector<ScoreItem> items;
  for (const auto& r : responses()) items.push_back({r, "a red circle on a blue square", std::nullopt});
  ReferenceEmbedder e;
  const RewardEmbedders embedders{&e, &e};
  for (auto _ : state) {
    auto out = jobs == 0 ? score_batch_serial(items, {1, 0}, embedders, config())
                         : score_batch_omp(items, {1, 0}, embedders, config(), jobs);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * items.size());
}

void BM_bon(benchmark::State& state) {
  const int jobs = static_cast<int>(state.range(0));
  std::mt19937_64 rng(3);
  std::vector<std::vector<double>> per(2000, std::vector<double>(64));
  for (auto& p : per)
    for (double& x : p) x = uniform01(rng);
  const std::vector<std::size_t> n = {1, 2, 4, 8, 16, 32, 64};
  for (auto _ : state) {
    auto out = jobs == 0 ? bon_curve(per, n) : bon_curve_omp(per, n, jobs);
    benchmark::DoNotOptimize(out);
  }
  state.SetItemsProcessed(state.iterations() * per.size());
}

void thread_args(benchmark::internal::Benchmark* b) {
  b->Arg(0);
  for (int t = 1; t <= std::max(1, resolve_jobs(0)); t *= 2) b->Arg(t);
  b->Unit(benchmark::kMillisecond)->UseRealTime();
}

}  // namespace

BENCHMARK(BM_validate)->Apply(thread_args);
BENCHMARK(BM_render)->Apply(thread_args);
BENCHMARK(BM_score)->Apply(thread_args);
BENCHMARK(BM_bon)->Apply(thread_args);

BENCHMARK_MAIN();
