#include <benchmark/benchmark.h>

#include "coresketch/coreset.hpp"
#include "coresketch/linalg.hpp"
#include "coresketch/rng.hpp"
#include "coresketch/sampler.hpp"
#include "coresketch/weights.hpp"

using namespace coresketch;

namespace {

DenseMatrix random_matrix(Index n, Index d, std::uint64_t seed) {
  RngStream rng = RngStream(seed).derive("bench");
  DenseMatrix a(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < d; ++j) a(i, j) = rng.next_gaussian();
  return a;
}

void BM_ThinSvd(benchmark::State& state) {
  DenseMatrix a = random_matrix(state.range(0), 16, 1);
  for (auto _ : state) benchmark::DoNotOptimize(thin_svd(a));
}
BENCHMARK(BM_ThinSvd)->Arg(256)->Arg(1024)->Arg(4096);

void BM_Qsample(benchmark::State& state) {
  const std::size_t n = static_cast<std::size_t>(state.range(0));
  std::vector<double> probs(n, 0.1);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    QueryLedger ledger;
    benchmark::DoNotOptimize(qsample(probs, ledger, seed++));
  }
}
BENCHMARK(BM_Qsample)->Arg(1 << 12)->Arg(1 << 16)->Arg(1 << 20);

void BM_LeverageOracleQuery(benchmark::State& state) {
  DenseMatrix c = random_matrix(state.range(0), 16, 2);
  WeightOracleState oracle = leverage_preprocess(c, 100000, kDefaultJlFactor, 3);
  DenseMatrix queries = random_matrix(1024, 16, 4);
  Index i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(oracle.query_row(queries, i));
    i = (i + 1) % 1024;
  }
}
BENCHMARK(BM_LeverageOracleQuery)->Arg(256)->Arg(2048);

void BM_L2Coreset(benchmark::State& state) {
  DenseMatrix a = random_matrix(state.range(0), 10, 5);
  std::uint64_t seed = 0;
  for (auto _ : state) {
    QueryLedger ledger;
    benchmark::DoNotOptimize(l2_coreset(a, 0.5, 0.1, ledger, seed++));
  }
}
BENCHMARK(BM_L2Coreset)->Arg(1 << 12)->Arg(1 << 14);

void BM_LewisWeights(benchmark::State& state) {
  DenseMatrix a = random_matrix(state.range(0), 8, 6);
  for (auto _ : state) benchmark::DoNotOptimize(lewis_weights(a, 1.0, 1e-8, 200));
}
BENCHMARK(BM_LewisWeights)->Arg(256)->Arg(1024);

}  // namespace

BENCHMARK_MAIN();
