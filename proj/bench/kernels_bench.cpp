#include <benchmark/benchmark.h>

#include "rblo/kernels.hpp"
#include "rblo/rng.hpp"

using rblo::kernels::Exec;

namespace {

Eigen::MatrixXd unit_rows(Eigen::Index n, Eigen::Index d) {
  rblo::Rng rng(11);
  return rblo::kernels::row_normalize(rng.normal_matrix(n, d), Exec::serial);
}

void BM_KnnCosine(benchmark::State& state, Exec exec) {
  const auto rows = unit_rows(state.range(0), 64);
  for (auto _ : state) benchmark::DoNotOptimize(rblo::kernels::knn_cosine(rows, 10, exec));
}

void BM_NearestCentroid(benchmark::State& state, Exec exec) {
  const auto points = unit_rows(state.range(0), 8);
  const auto centroids = unit_rows(6, 8);
  for (auto _ : state) benchmark::DoNotOptimize(rblo::kernels::nearest_centroid(points, centroids, exec));
}

void BM_RowNormalize(benchmark::State& state, Exec exec) {
  rblo::Rng rng(3);
  const auto m = rng.normal_matrix(state.range(0), 32);
  for (auto _ : state) benchmark::DoNotOptimize(rblo::kernels::row_normalize(m, exec));
}

}  // namespace

BENCHMARK_CAPTURE(BM_KnnCosine, serial, Exec::serial)->Arg(169)->Arg(1000);
BENCHMARK_CAPTURE(BM_KnnCosine, parallel, Exec::parallel)->Arg(169)->Arg(1000);
BENCHMARK_CAPTURE(BM_NearestCentroid, serial, Exec::serial)->Arg(169)->Arg(10000);
BENCHMARK_CAPTURE(BM_NearestCentroid, parallel, Exec::parallel)->Arg(169)->Arg(10000);
BENCHMARK_CAPTURE(BM_RowNormalize, serial, Exec::serial)->Arg(1000)->Arg(100000);
BENCHMARK_CAPTURE(BM_RowNormalize, parallel, Exec::parallel)->Arg(1000)->Arg(100000);

BENCHMARK_MAIN();
