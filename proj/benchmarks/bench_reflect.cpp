#include <benchmark/benchmark.h>

#include "reflect/report.hpp"
#include "support/test_support.hpp"

namespace {

using namespace reflect;

void BM_ShapleyExact(benchmark::State& state) {
  std::mt19937_64 rng(1);
  testing::ModelShape shape;
  shape.features = static_cast<std::size_t>(state.range(0));
  const auto m = testing::random_linear_model(rng, shape);
  const auto bg = testing::random_background(rng, m, 20, false);
  const auto x = testing::random_case(rng, m, false);
  for (auto _ : state) benchmark::DoNotOptimize(shapley_exact(m, x, bg));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_ShapleyExact)->DenseRange(4, 14, 2)->Unit(benchmark::kMillisecond);

void BM_CounterfactualSearch(benchmark::State& state) {
  std::mt19937_64 rng(2);
  testing::ModelShape shape;
  shape.features = 6;
  shape.dummy_share = 0.0;
  const auto m = testing::random_tree_model(rng, shape, 4, 2);
  const auto x = testing::random_case(rng, m, false);
  const auto target = predict(m, x).predicted == "L0" ? "L1" : "L0";
  CounterfactualConstraints k;
  k.grid_steps = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(counterfactual_search(m, x, target, k));
}
BENCHMARK(BM_CounterfactualSearch)->Arg(11)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);

void BM_Pipeline(benchmark::State& state) {
  const auto& name = testing::fixture_names()[static_cast<std::size_t>(state.range(0))];
  const auto f = testing::load_fixture(name);
  state.SetLabel(name);
  for (auto _ : state) benchmark::DoNotOptimize(question_report(run_pipeline(f.inputs, f.config)).dump());
}
BENCHMARK(BM_Pipeline)->DenseRange(0, 3)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
