#include <benchmark/benchmark.h>

#include <vector>

#include "sturmian/bandtree.hpp"
#include "sturmian/gaplabels.hpp"
#include "sturmian/spectrum.hpp"
#include "sturmian/tridiag.hpp"

using namespace sturmian;

namespace {

// Golden-mean convergents F_k / F_{k+1}.
void BM_ComputeBands(benchmark::State& state) {
  const SmallConvergent c = small_convergent(ContinuedFraction::golden_mean(), static_cast<int>(state.range(0)));
  const double V = static_cast<double>(state.range(1));
  for (auto _ : state) benchmark::DoNotOptimize(compute_bands(c.p, c.q, V, PrecisionBudget{}));
  state.counters["q"] = static_cast<double>(c.q);
}
BENCHMARK(BM_ComputeBands)->ArgsProduct({{6, 9, 12, 14}, {2, 6}})->Unit(benchmark::kMillisecond);

void BM_BuildTree(benchmark::State& state) {
  const int depth = static_cast<int>(state.range(0));
  for (auto _ : state) {
    SpectrumCache::global().clear();
    benchmark::DoNotOptimize(build_tree(ContinuedFraction::golden_mean(), 2.0, depth, PrecisionBudget{}));
  }
}
BENCHMARK(BM_BuildTree)->Arg(8)->Arg(11)->Unit(benchmark::kMillisecond);

void BM_CertifyGaps(benchmark::State& state) {
  for (auto _ : state) {
    SpectrumCache::global().clear();
    benchmark::DoNotOptimize(certify_gaps(ContinuedFraction::golden_mean(), 6.0, -5, 5, 10, PrecisionBudget{}));
  }
}
BENCHMARK(BM_CertifyGaps)->Unit(benchmark::kMillisecond);

void BM_SturmCount(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::vector<double> diag(n), off(n - 1, 1.0);
  for (std::size_t i = 0; i < n; ++i) diag[i] = (i * 89) % 144 >= 144 - 89 ? 2.0 : 0.0;
  double x = -2.5;
  for (auto _ : state) {
    benchmark::DoNotOptimize(sturm_count(diag, off, x));
    x = x > 3.5 ? -2.5 : x + 0.01;
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_SturmCount)->RangeMultiplier(4)->Range(64, 16384)->Complexity(benchmark::oN);

}  // namespace

BENCHMARK_MAIN();
