#include <benchmark/benchmark.h>

#include <vector>

#include "impactpath/harness.hpp"
#include "impactpath/pathway.hpp"
#include "impactpath/qoi.hpp"
#include "impactpath/surrogate.hpp"

using namespace impactpath;

namespace {

const SurrogatePreset& preset() {
  static const SurrogatePreset p = hswv_surrogate_v1();
  return p;
}

void BM_SurrogateStep(benchmark::State& st) {
  const auto grid = preset().grid.build();
  const Surrogate model(grid, preset().params, preset().eruption);
  const RunSeed seed{1, 0};
  ModelState s = model.initialize(seed);
  VariabilityStream stream(seed);
  for (auto _ : st) {
    model.advance(s, stream);
    benchmark::DoNotOptimize(s.temperature.data.data());
  }
}
BENCHMARK(BM_SurrogateStep)->Unit(benchmark::kMicrosecond);

void BM_RegistryEvaluate(benchmark::State& st) {
  const auto grid = preset().grid.build();
  const QoiEvaluator eval(grid, replicated_registry(static_cast<std::size_t>(st.range(0))));
  const ModelState s = initialize(preset().params, grid, {1, 0});
  std::vector<double> out(eval.size());
  for (auto _ : st) {
    eval.evaluate(s, out);
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_RegistryEvaluate)->Arg(7)->Arg(35)->Arg(175)->Arg(875)->Unit(benchmark::kMicrosecond);

void BM_TrackerObserve(benchmark::State& st) {
  const BaseDag base = base_dag_canonical();
  std::vector<BoundsTest> tests(base.r(), BoundsTest::absolute(4.0e-10, 8.0e-10));
  std::vector<double> values(base.r(), 6.0e-10);
  const std::size_t rows = 1 << 16;
  PathwayTracker tracker(base, tests);
  tracker.reserve(rows);
  std::size_t m = 0;
  for (auto _ : st) {
    if (m == rows) {
      st.PauseTiming();
      tracker = PathwayTracker(base, tests);
      tracker.reserve(rows);
      m = 0;
      st.ResumeTiming();
    }
    tracker.observe(m++, values);
  }
}
BENCHMARK(BM_TrackerObserve);

}  // namespace
BENCHMARK_MAIN();
