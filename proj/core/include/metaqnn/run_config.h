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

#ifndef METAQNN_RUN_CONFIG_H_
#define METAQNN_RUN_CONFIG_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

#include "metaqnn/oracle.h"
#include "metaqnn/qlearning.h"
#include "metaqnn/space.h"

namespace metaqnn {

enum class OracleKind { kSurrogate, kTrainer };

struct OracleSettings {
  OracleKind kind = OracleKind::kSurrogate;
  // Surrogate noise seed; defaults to the run seed.
  std::optional<std::uint64_t> surrogate_seed;
  SurrogateWeights weights;
  // Exactly one of these is used for the trainer.
  std::string trainer_command;
  std::string trainer_address;
  double timeout_seconds = 7200.0;
  int max_retries = 2;
  int epochs = 20;
};

// A whole search run. Every default reproduces the published setup.
struct RunConfig {
  SpaceConfig space;
  QConfig qlearning;
  OracleSettings oracle;
  int workers = 1;
  std::string output_dir = "metaqnn_out";
  std::string dataset = "cifar10";
  int top_k = 10;
  std::int64_t checkpoint_every = 50;
  std::int64_t max_stall_iterations = 100000;
  bool wall_clock_timestamps = false;

  void Validate() const;
};

// Parses the JSON config document. Unknown keys are rejected. A "preset"
// key inside "space" selects the base SpaceConfig before field overrides.
// Throws ConfigError.
RunConfig ParseRunConfig(std::string_view json_text);
RunConfig LoadRunConfig(const std::string& path);

// Canonical JSON form of a config, including every default.
std::string RunConfigToJson(const RunConfig& config);

}  // namespace metaqnn

#endif  // METAQNN_RUN_CONFIG_H_
