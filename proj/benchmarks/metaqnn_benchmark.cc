/* Copyright 2026 The MetaQNN Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include <benchmark/benchmark.h>

#include <random>

#include "metaqnn/oracle.h"
#include "metaqnn/qlearning.h"
#include "metaqnn/search.h"
#include "metaqnn/space.h"

namespace metaqnn {
namespace {

void BM_LegalActions(benchmark::State& state) {
  const SpaceConfig c;
  const AgentState start = AgentState::Start(c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(LegalActions(start, c));
  }
}
BENCHMARK(BM_LegalActions);

void BM_SampleNewNetwork(benchmark::State& state) {
  const ActionSpace space{SpaceConfig{}};
  const QTable q;
  std::mt19937_64 rng(1);
  const double epsilon = static_cast<double>(state.range(0)) / 10.0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(SampleNewNetwork(epsilon, q, rng, space));
  }
}
BENCHMARK(BM_SampleNewNetwork)->Arg(10)->Arg(1);

void BM_UpdateQValues(benchmark::State& state) {
  const ActionSpace space{SpaceConfig{}};
  const QConfig config;
  QTable q;
  std::mt19937_64 rng(2);
  const Trajectory t = SampleNewNetwork(1.0, q, rng, space);
  for (auto _ : state) {
    UpdateQValues(q, t, 0.7, space, config);
  }
}
BENCHMARK(BM_UpdateQValues);

void BM_ScaledSearch(benchmark::State& state) {
  QConfig q;
  q.schedule = EpsilonSchedule::Parse(
      "1.0:150,0.9:10,0.8:10,0.7:10,0.6:15,0.5:15,0.4:15,0.3:15,0.2:15,0.1:15");
  for (auto _ : state) {
    SurrogateOracle oracle(3);
    benchmark::DoNotOptimize(RunSearch(SpaceConfig{}, q, oracle));
  }
}
BENCHMARK(BM_ScaledSearch)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace metaqnn

BENCHMARK_MAIN();
