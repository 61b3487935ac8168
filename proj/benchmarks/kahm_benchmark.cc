// Copyright 2026 The KAHM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "kahm/compositions.h"
#include "kahm/kahm.h"
#include "kahm/kernel_rls.h"
#include "kahm/privacy.h"
#include "kahm/random.h"

namespace kahm {
namespace {

Matrix Uniform(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  Rng rng(seed);
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j) {
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = 2.0 * rng.UniformOpen() - 1.0;
  }
  return m;
}

// Fit cost over N at MNIST width.
void BM_FitKahm(benchmark::State& state) {
  const Matrix data = Uniform(state.range(0), 784, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(KahmModel::Fit(data, 20));
  }
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_FitKahm)->RangeMultiplier(2)->Range(128, 2048)->Unit(benchmark::kMillisecond)
    ->Complexity();

void BM_Evaluate(benchmark::State& state) {
  const KahmModel model = KahmModel::Fit(Uniform(state.range(0), 784, 2), 20);
  const Matrix queries = Uniform(64, 784, 3);
  Eigen::Index r = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.Evaluate(queries.row(r).transpose()));
    r = (r + 1) % queries.rows();
  }
}
BENCHMARK(BM_Evaluate)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_EvaluateRows(benchmark::State& state) {
  const KahmModel model = KahmModel::Fit(Uniform(1024, 784, 4), 20);
  const Matrix queries = Uniform(state.range(0), 784, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.EvaluateRows(queries));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EvaluateRows)->Arg(64)->Arg(1024)->Unit(benchmark::kMillisecond);

void BM_DeepEvaluate(benchmark::State& state) {
  const DeepKahm model = DeepKahm::Fit(Uniform(512, 784, 6), 20, static_cast<int>(state.range(0)));
  const Vector y = Uniform(1, 784, 7).row(0).transpose();
  for (auto _ : state) {
    benchmark::DoNotOptimize(model.Evaluate(y));
  }
}
BENCHMARK(BM_DeepEvaluate)->DenseRange(1, 3)->Unit(benchmark::kMicrosecond);

// Only the iteration; the spectrum is computed once outside the loop.
void BM_FixedPoint(benchmark::State& state) {
  const Matrix data = Uniform(state.range(0), 8, 8);
  const KahmModel model = KahmModel::Fit(data, 4);
  const MseSpectrum spectrum(model.TrainingKernel(), data);
  for (auto _ : state) {
    benchmark::DoNotOptimize(FindLambdaStar(spectrum));
  }
}
BENCHMARK(BM_FixedPoint)->Arg(256)->Arg(1024)->Unit(benchmark::kMicrosecond);

void BM_NoiseSampler(benchmark::State& state) {
  NoiseSampler sample(PrivacySpec{1.0, 1e-5, 2.0, 9}, 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(sample());
  }
}
BENCHMARK(BM_NoiseSampler);

}  // namespace
}  // namespace kahm

BENCHMARK_MAIN();
