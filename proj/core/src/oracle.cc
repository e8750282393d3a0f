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

#include "metaqnn/oracle.h"

#include <algorithm>

namespace metaqnn {
namespace {

// FNV-1a followed by the splitmix64 finalizer; stable across platforms,
// unlike std::hash.
std::uint64_t HashString(std::uint64_t seed, const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL ^ seed;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

}  // namespace

SurrogateOracle::SurrogateOracle(std::uint64_t seed, SurrogateWeights weights)
    : seed_(seed), weights_(weights) {}

double SurrogateOracle::Evaluate(const Architecture& arch) {
  return Score(arch, Noise(Serialize(arch)));
}

double SurrogateOracle::Score(const Architecture& arch, double noise) const {
  int convs = 0, pools = 0, fcs = 0;
  for (const auto& l : arch.layers) {
    switch (l.kind) {
      case LayerKind::kConv: ++convs; break;
      case LayerKind::kPool: ++pools; break;
      case LayerKind::kFullyConnected: ++fcs; break;
      default: break;
    }
  }
  const double score = weights_.base +
                       weights_.per_conv * std::min(convs, weights_.conv_cap) +
                       weights_.per_pool * std::min(pools, weights_.pool_cap) -
                       weights_.extra_fc_penalty * std::max(0, fcs - 1) +
                       noise;
  return std::clamp(score, 0.0, 1.0);
}

double SurrogateOracle::Noise(const std::string& canonical) const {
  // Top 53 bits give a uniform double in [0, 1).
  const double u =
      static_cast<double>(HashString(seed_, canonical) >> 11) * 0x1.0p-53;
  return (2.0 * u - 1.0) * weights_.noise;
}

}  // namespace metaqnn
