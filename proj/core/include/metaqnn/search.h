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

#ifndef METAQNN_SEARCH_H_
#define METAQNN_SEARCH_H_

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "metaqnn/oracle.h"
#include "metaqnn/qlearning.h"
#include "metaqnn/space.h"

namespace metaqnn {

enum class EvalStatus { kOk, kFailed };

// One line of the event log.
struct IterationEvent {
  std::int64_t iteration = 0;
  double epsilon = 0.0;
  std::string arch;
  std::optional<double> accuracy;  // empty when status is kFailed
  bool cached = false;
  EvalStatus status = EvalStatus::kOk;
  std::optional<std::string> timestamp;  // UTC ISO-8601, only if enabled

  // {"iteration":..,"epsilon":..,"arch":..,"accuracy":..,"cached":..,
  //  "status":"ok"|"failed","timestamp":..}
  std::string ToJsonLine() const;
  // Throws std::invalid_argument on malformed lines.
  static IterationEvent FromJsonLine(std::string_view line);

  friend bool operator==(const IterationEvent&,
                         const IterationEvent&) = default;
};

// Reads an NDJSON event log. A malformed final line (a write cut short) is
// dropped; malformed lines elsewhere throw std::invalid_argument.
std::vector<IterationEvent> ReadEventLog(std::istream& in);

struct DictionaryEntry {
  double accuracy = 0.0;
  std::int64_t first_iteration = 0;
  friend bool operator==(const DictionaryEntry&,
                         const DictionaryEntry&) = default;
};

// Canonical architecture string -> measured accuracy.
class ReplayDictionary {
 public:
  const DictionaryEntry* Find(const std::string& arch) const;
  // Returns false if `arch` was already present (the entry is unchanged).
  bool Insert(const std::string& arch, DictionaryEntry entry);
  std::size_t size() const { return entries_.size(); }
  const std::map<std::string, DictionaryEntry>& entries() const {
    return entries_;
  }

  // {"<arch>": {"accuracy": a, "first_iteration": i}, ...}
  std::string ToJson() const;
  static ReplayDictionary FromJson(std::string_view json);

  friend bool operator==(const ReplayDictionary&,
                         const ReplayDictionary&) = default;

 private:
  std::map<std::string, DictionaryEntry> entries_;
};

// Everything needed to continue a search.
struct SearchState {
  QTable q;
  ReplayDictionary dictionary;
  std::vector<Episode> replay_memory;
  std::int64_t next_iteration = 0;
  int unique_models = 0;
};

// Rebuilds dictionary, unique count and replay memory from a log. When no
// Q snapshot is given, each logged episode is applied once in log order.
SearchState ResumeState(const std::vector<IterationEvent>& events,
                        std::optional<QTable> q, const SpaceConfig& space,
                        const QConfig& qconfig);

struct SearchOptions {
  // Evaluations kept in flight. 1 is the deterministic sequential mode.
  int workers = 1;
  // Extra attempts after a retriable evaluation error.
  int max_retries = 2;
  // Stop when this many consecutive iterations produce no new model (the
  // space may be smaller than the schedule asks for).
  std::int64_t max_stall_iterations = 100000;
  bool wall_clock_timestamps = false;
  // Invoked by the coordinator thread after each iteration is applied.
  std::function<void(const IterationEvent&)> on_event;
  // Invoked every `checkpoint_every` iterations and at the end; 0 disables
  // the periodic calls.
  std::int64_t checkpoint_every = 0;
  std::function<void(const SearchState&)> on_checkpoint;
};

struct SearchResult {
  SearchState state;
  std::vector<IterationEvent> log;  // events of this invocation only
  std::int64_t oracle_invocations = 0;
  bool stalled = false;
};

// Runs the epsilon schedule from `initial` until the unique-model quota is
// met. Throws OracleUnavailableError if the oracle goes away.
SearchResult RunSearch(const SpaceConfig& space, const QConfig& qconfig,
                       RewardOracle& oracle, const SearchOptions& options,
                       SearchState initial);

SearchResult RunSearch(const SpaceConfig& space, const QConfig& qconfig,
                       RewardOracle& oracle,
                       const SearchOptions& options = {});

struct RankedModel {
  std::string arch;
  double accuracy = 0.0;
  std::int64_t params = 0;
};

// Best `k` dictionary entries by accuracy, ties broken by fewer parameters
// (all-trainable count), then by string.
std::vector<RankedModel> TopModels(const ReplayDictionary& dictionary,
                                   const SpaceConfig& space, std::size_t k);

}  // namespace metaqnn

#endif  // METAQNN_SEARCH_H_
