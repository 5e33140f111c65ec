#include <benchmark/benchmark.h>

#include <random>

#include "rfslln/fieldgen.hpp"
#include "rfslln/lattice.hpp"
#include "rfslln/maximal.hpp"

using namespace rfslln;

namespace {

MultiIndex square(std::int64_t side) { return MultiIndex{side, side}; }

LatticeTable noise(const MultiIndex& shape) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> z;
  return LatticeTable::tabulate(shape, [&](const MultiIndex&) { return z(rng); });
}

void BM_PrefixSums(benchmark::State& state) {
  const auto x = noise(square(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(prefix_sums(x));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(x.cell_count()));
}
BENCHMARK(BM_PrefixSums)->RangeMultiplier(4)->Range(64, 1024);

void BM_RunningMax(benchmark::State& state) {
  const auto s = prefix_sums(noise(square(state.range(0))));
  const auto w = LatticeTable::filled(s.shape(), 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(running_weighted_max(s, w));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(s.cell_count()));
}
BENCHMARK(BM_RunningMax)->RangeMultiplier(4)->Range(64, 1024);

void BM_Generate(benchmark::State& state) {
  FieldModel m;
  m.margin = margins::Normal{};
  const auto shape = square(state.range(0));
  std::uint64_t rep = 0;
  for (auto _ : state) benchmark::DoNotOptimize(generate(m, shape, rep++));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(shape.volume()));
}
BENCHMARK(BM_Generate)->RangeMultiplier(4)->Range(64, 1024);

void BM_ExactTail(benchmark::State& state) {
  FieldModel m;
  m.kind = FieldKind::FiniteSupport;
  m.margin = margins::Rademacher{};
  const MultiIndex n{3, state.range(0)};
  for (auto _ : state) benchmark::DoNotOptimize(exact_tail_prob(m, n, 2.0));
  state.SetItemsProcessed(state.iterations() << (3 * state.range(0)));
}
BENCHMARK(BM_ExactTail)->DenseRange(2, 5);

}  // namespace

BENCHMARK_MAIN();
