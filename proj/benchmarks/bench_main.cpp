// Copyright 2026 The equiaudit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <benchmark/benchmark.h>

#include "equiaudit/audit.hpp"
#include "equiaudit/conv.hpp"
#include "equiaudit/synth.hpp"

namespace {

using namespace equiaudit;

Filter disk_filter(double radius, double h) {
  return radial_filter([radius](double r) { return bump_profile(r / radius); }, radius, h);
}

// Domain half-width 1 at spacing 2 / range(0) samples.
void BM_Convolve(benchmark::State& state) {
  const double h = 2.0 / static_cast<double>(state.range(0));
  const Grid f = make_bump({0.1, 0.05}, 0.5, 1.0, GridGeometry(1.0, h));
  const Filter k = disk_filter(0.1, h);
  for (auto _ : state) benchmark::DoNotOptimize(convolve(f, k));
  state.counters["taps"] = static_cast<double>(k.taps().size());
}
BENCHMARK(BM_Convolve)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ResampleAffine(benchmark::State& state) {
  const double h = 2.0 / static_cast<double>(state.range(0));
  const Grid f = make_bump({0.1, 0.05}, 0.5, 1.0, GridGeometry(1.0, h));
  const LinearMap2 t = LinearMap2::rotation_degrees(30);
  for (auto _ : state) benchmark::DoNotOptimize(resample_affine(f, t));
}
BENCHMARK(BM_ResampleAffine)->Arg(100)->Arg(200)->Arg(400)->Unit(benchmark::kMillisecond);

void BM_ModelForward(benchmark::State& state) {
  ModelRecipe r;
  r.layers = static_cast<int>(state.range(0));
  r.channels = 2;
  r.kernel_radius = 0.1;
  const double h = 0.01;
  const CnnModel m = synthesize_model(r).at(h);
  const Grid f = make_bump({0.1, 0.05}, 0.5, 1.0, GridGeometry(1.0, h));
  for (auto _ : state) benchmark::DoNotOptimize(model_forward(f, m));
}
BENCHMARK(BM_ModelForward)->DenseRange(1, 3)->Unit(benchmark::kMillisecond);

void BM_EvaluateAt(benchmark::State& state) {
  ModelRecipe r;
  r.layers = 3;
  r.kernel_radius = 0.1;
  const double h = 0.01;
  const CnnModel m = synthesize_model(r).at(h);
  const Grid f = make_bump({0.1, 0.05}, 0.5, 1.0, GridGeometry(1.0, h));
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_at(f, m, 3, 0, {0, 0}));
}
BENCHMARK(BM_EvaluateAt)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
