#include <benchmark/benchmark.h>

#include "spacesteer/analytics.hpp"
#include "spacesteer/prompt.hpp"
#include "spacesteer/workspace.hpp"
#include "support.hpp"

using namespace spacesteer;
using namespace testing_support;

namespace {

const Workspace& crescent() {
  static const Workspace w = load_workspace(crescent_path());
  return w;
}

void BM_AssemblePrompt(benchmark::State& state) {
  const auto tpl = load_prompt_template(crescent_template_path());
  const Condition c = condition_presets()[static_cast<std::size_t>(state.range(0))];
  for (auto _ : state) benchmark::DoNotOptimize(assemble_prompt(crescent(), c, tpl));
  state.SetLabel(c.name);
}
BENCHMARK(BM_AssemblePrompt)->DenseRange(0, 10);

void BM_Serialize(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(serialize(crescent()));
}
BENCHMARK(BM_Serialize);

void BM_Deserialize(benchmark::State& state) {
  const std::string bytes = serialize(crescent());
  for (auto _ : state) benchmark::DoNotOptimize(deserialize(bytes));
}
BENCHMARK(BM_Deserialize);

void BM_Summarize(benchmark::State& state) {
  const Rubric rubric = load_rubric(rubric_path());
  std::mt19937_64 rng(1);
  std::vector<RunRecord> records;
  std::vector<std::string> order;
  for (const auto& c : condition_presets()) order.push_back(c.name);
  for (std::int64_t i = 0; i < state.range(0); ++i) {
    std::vector<double> s;
    for (const auto& item : rubric.items) {
      s.push_back(item.allowed_scores[rng() % item.allowed_scores.size()].score);
    }
    RunRecord r;
    r.condition = order[static_cast<std::size_t>(i) % order.size()];
    r.grade = GradeAudit{"", {}, make_breakdown(rubric, s)};
    records.push_back(std::move(r));
  }
  for (auto _ : state) benchmark::DoNotOptimize(summarize(records, order));
}
BENCHMARK(BM_Summarize)->Arg(110)->Arg(11000);

}  // namespace

BENCHMARK_MAIN();
