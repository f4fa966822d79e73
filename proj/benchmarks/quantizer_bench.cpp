#include <benchmark/benchmark.h>

#include "rdot/fixtures.hpp"
#include "rdot/quantizer.hpp"

namespace {

using namespace rdot;

void BM_LloydMax(benchmark::State& state) {
  const auto p = fixtures::ten_atom_source();
  const auto levels = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(lloyd_max(p, levels).distortion);
  }
}
BENCHMARK(BM_LloydMax)->DenseRange(2, 8, 3);

void BM_ExtremalEmd(benchmark::State& state) {
  const auto p = fixtures::ten_atom_source();
  const auto levels = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(extremal_emd_quantizer(p, levels).distortion);
  }
}
BENCHMARK(BM_ExtremalEmd)->DenseRange(2, 8, 3);

void BM_KmeansExact(benchmark::State& state) {
  const auto p = fixtures::ten_atom_source();
  const auto levels = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kmeans_1d_exact(p, levels).distortion);
  }
}
BENCHMARK(BM_KmeansExact)->DenseRange(2, 8, 3);

}  // namespace
