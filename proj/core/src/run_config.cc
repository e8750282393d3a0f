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

#include "metaqnn/run_config.h"

#include <fstream>
#include <sstream>

#include "json.hpp"

namespace metaqnn {
namespace {

using nlohmann::json;

[[noreturn]] void Bad(const std::string& where, const std::string& what) {
  throw ConfigError("config " + where + ": " + what);
}

const json& Object(const json& j, const std::string& where) {
  if (!j.is_object()) Bad(where, "expected an object");
  return j;
}

template <typename T>
T Get(const json& v, const std::string& where) {
  try {
    if constexpr (std::is_same_v<T, bool>) {
      if (!v.is_boolean()) Bad(where, "expected a boolean");
    } else if constexpr (std::is_integral_v<T>) {
      if (!v.is_number_integer()) Bad(where, "expected an integer");
    } else if constexpr (std::is_floating_point_v<T>) {
      if (!v.is_number()) Bad(where, "expected a number");
    } else if constexpr (std::is_same_v<T, std::string>) {
      if (!v.is_string()) Bad(where, "expected a string");
    }
    return v.get<T>();
  } catch (const json::exception& e) {
    Bad(where, e.what());
  }
}

std::vector<int> IntList(const json& v, const std::string& where) {
  if (!v.is_array()) Bad(where, "expected an array of integers");
  std::vector<int> out;
  for (const auto& x : v) out.push_back(Get<int>(x, where));
  return out;
}

void ParseSpace(const json& j, SpaceConfig& s) {
  Object(j, "space");
  if (const auto it = j.find("preset"); it != j.end()) {
    s = SpaceConfig::Preset(Get<std::string>(*it, "space.preset"));
  }
  for (const auto& [key, v] : j.items()) {
    const std::string where = "space." + key;
    if (key == "preset") continue;
    if (key == "max_depth") s.max_depth = Get<int>(v, where);
    else if (key == "conv_fields") s.conv_fields = IntList(v, where);
    else if (key == "conv_filters") s.conv_filters = IntList(v, where);
    else if (key == "fc_neurons") s.fc_neurons = IntList(v, where);
    else if (key == "max_consecutive_fc") s.max_consecutive_fc = Get<int>(v, where);
    else if (key == "bin_thresholds") s.bin_thresholds = IntList(v, where);
    else if (key == "input_size") s.input_size = Get<int>(v, where);
    else if (key == "input_channels") s.input_channels = Get<int>(v, where);
    else if (key == "num_classes") s.num_classes = Get<int>(v, where);
    else if (key == "pool_variants") {
      if (!v.is_array()) Bad(where, "expected an array of [field, stride]");
      s.pool_variants.clear();
      for (const auto& p : v) {
        const auto pair = IntList(p, where);
        if (pair.size() != 2) Bad(where, "expected [field, stride]");
        s.pool_variants.push_back({pair[0], pair[1]});
      }
    } else {
      Bad(where, "unknown key");
    }
  }
}

void ParseQLearning(const json& j, QConfig& q) {
  Object(j, "qlearning");
  for (const auto& [key, v] : j.items()) {
    const std::string where = "qlearning." + key;
    if (key == "alpha") q.alpha = Get<double>(v, where);
    else if (key == "gamma") q.gamma = Get<double>(v, where);
    else if (key == "q_init") q.q_init = Get<double>(v, where);
    else if (key == "replay_samples") q.replay_samples = Get<int>(v, where);
    else if (key == "seed") q.seed = Get<std::uint64_t>(v, where);
    else if (key == "schedule") {
      if (v.is_string()) {
        q.schedule = EpsilonSchedule::Parse(v.get<std::string>());
      } else if (v.is_array()) {
        std::vector<EpsilonStep> steps;
        for (const auto& step : v) {
          if (!step.is_array() || step.size() != 2) {
            Bad(where, "expected [epsilon, unique_models] pairs");
          }
          steps.push_back({Get<double>(step[0], where), Get<int>(step[1], where)});
        }
        q.schedule = EpsilonSchedule(std::move(steps));
      } else {
        Bad(where, "expected \"eps:count,...\" or [[eps, count], ...]");
      }
    } else {
      Bad(where, "unknown key");
    }
  }
}

void ParseWeights(const json& j, SurrogateWeights& w) {
  Object(j, "oracle.weights");
  for (const auto& [key, v] : j.items()) {
    const std::string where = "oracle.weights." + key;
    if (key == "base") w.base = Get<double>(v, where);
    else if (key == "per_conv") w.per_conv = Get<double>(v, where);
    else if (key == "conv_cap") w.conv_cap = Get<int>(v, where);
    else if (key == "per_pool") w.per_pool = Get<double>(v, where);
    else if (key == "pool_cap") w.pool_cap = Get<int>(v, where);
    else if (key == "extra_fc_penalty") w.extra_fc_penalty = Get<double>(v, where);
    else if (key == "noise") w.noise = Get<double>(v, where);
    else Bad(where, "unknown key");
  }
}

void ParseOracle(const json& j, OracleSettings& o) {
  Object(j, "oracle");
  for (const auto& [key, v] : j.items()) {
    const std::string where = "oracle." + key;
    if (key == "kind") {
      const auto kind = Get<std::string>(v, where);
      if (kind == "surrogate") o.kind = OracleKind::kSurrogate;
      else if (kind == "trainer") o.kind = OracleKind::kTrainer;
      else Bad(where, "expected \"surrogate\" or \"trainer\"");
    } else if (key == "seed") {
      o.surrogate_seed = Get<std::uint64_t>(v, where);
    } else if (key == "weights") {
      ParseWeights(v, o.weights);
    } else if (key == "command") {
      o.trainer_command = Get<std::string>(v, where);
    } else if (key == "address") {
      o.trainer_address = Get<std::string>(v, where);
    } else if (key == "timeout_seconds") {
      o.timeout_seconds = Get<double>(v, where);
    } else if (key == "max_retries") {
      o.max_retries = Get<int>(v, where);
    } else if (key == "epochs") {
      o.epochs = Get<int>(v, where);
    } else {
      Bad(where, "unknown key");
    }
  }
}

}  // namespace

void RunConfig::Validate() const {
  space.Validate();
  qlearning.Validate();
  if (workers < 1) throw ConfigError("workers must be >= 1");
  if (top_k < 0) throw ConfigError("top_k must be >= 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (max_stall_iterations < 1) {
    throw ConfigError("max_stall_iterations must be >= 1");
  }
  if (oracle.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  if (!(oracle.timeout_seconds > 0.0)) {
    throw ConfigError("timeout_seconds must be positive");
  }
  if (oracle.kind == OracleKind::kTrainer && oracle.trainer_command.empty() &&
      oracle.trainer_address.empty()) {
    throw ConfigError("trainer oracle needs a command or an address");
  }
}

RunConfig ParseRunConfig(std::string_view json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  Object(j, "root");
  RunConfig c;
  // Space first so a preset never clobbers other sections.
  if (const auto it = j.find("space"); it != j.end()) ParseSpace(*it, c.space);
  for (const auto& [key, v] : j.items()) {
    if (key == "space") continue;
    if (key == "qlearning") ParseQLearning(v, c.qlearning);
    else if (key == "oracle") ParseOracle(v, c.oracle);
    else if (key == "workers") c.workers = Get<int>(v, key);
    else if (key == "output_dir") c.output_dir = Get<std::string>(v, key);
    else if (key == "dataset") c.dataset = Get<std::string>(v, key);
    else if (key == "top_k") c.top_k = Get<int>(v, key);
    else if (key == "checkpoint_every") c.checkpoint_every = Get<std::int64_t>(v, key);
    else if (key == "max_stall_iterations") c.max_stall_iterations = Get<std::int64_t>(v, key);
    else if (key == "wall_clock_timestamps") c.wall_clock_timestamps = Get<bool>(v, key);
    else Bad(key, "unknown key");
  }
  c.Validate();
  return c;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str());
}

std::string RunConfigToJson(const RunConfig& c) {
  json pools = json::array();
  for (const auto& p : c.space.pool_variants) pools.push_back({p.field, p.stride});
  json schedule = json::array();
  for (const auto& s : c.qlearning.schedule.steps()) {
    schedule.push_back({s.epsilon, s.unique_models});
  }
  const auto& w = c.oracle.weights;
  json oracle = {
      {"kind", c.oracle.kind == OracleKind::kSurrogate ? "surrogate" : "trainer"},
      {"weights",
       {{"base", w.base},
        {"per_conv", w.per_conv},
        {"conv_cap", w.conv_cap},
        {"per_pool", w.per_pool},
        {"pool_cap", w.pool_cap},
        {"extra_fc_penalty", w.extra_fc_penalty},
        {"noise", w.noise}}},
      {"command", c.oracle.trainer_command},
      {"address", c.oracle.trainer_address},
      {"timeout_seconds", c.oracle.timeout_seconds},
      {"max_retries", c.oracle.max_retries},
      {"epochs", c.oracle.epochs}};
  if (c.oracle.surrogate_seed) oracle["seed"] = *c.oracle.surrogate_seed;
  const json j = {
      {"dataset", c.dataset},
      {"workers", c.workers},
      {"output_dir", c.output_dir},
      {"top_k", c.top_k},
      {"checkpoint_every", c.checkpoint_every},
      {"max_stall_iterations", c.max_stall_iterations},
      {"wall_clock_timestamps", c.wall_clock_timestamps},
      {"space",
       {{"max_depth", c.space.max_depth},
        {"conv_fields", c.space.conv_fields},
        {"conv_filters", c.space.conv_filters},
        {"pool_variants", pools},
        {"fc_neurons", c.space.fc_neurons},
        {"max_consecutive_fc", c.space.max_consecutive_fc},
        {"bin_thresholds", c.space.bin_thresholds},
        {"input_size", c.space.input_size},
        {"input_channels", c.space.input_channels},
        {"num_classes", c.space.num_classes}}},
      {"qlearning",
       {{"alpha", c.qlearning.alpha},
        {"gamma", c.qlearning.gamma},
        {"q_init", c.qlearning.q_init},
        {"replay_samples", c.qlearning.replay_samples},
        {"schedule", schedule},
        {"seed", c.qlearning.seed}}},
      {"oracle", oracle}};
  return j.dump(2);
}

}  // namespace metaqnn
