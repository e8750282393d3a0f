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

#ifndef METAQNN_QLEARNING_H_
#define METAQNN_QLEARNING_H_

#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "metaqnn/architecture.h"
#include "metaqnn/space.h"

namespace metaqnn {

// A reward outside [0, 1] reached the Q update.
class RewardRangeError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

// A Q-table snapshot could not be read.
class SnapshotError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EpsilonStep {
  double epsilon = 1.0;
  int unique_models = 0;

  friend bool operator==(const EpsilonStep&, const EpsilonStep&) = default;
};

// Exploration schedule keyed by the number of unique models evaluated.
class EpsilonSchedule {
 public:
  EpsilonSchedule() = default;
  explicit EpsilonSchedule(std::vector<EpsilonStep> steps);

  // 1.0 for 1500 models, then 0.9 .. 0.1 with 100, 100, 100, 150 x 6.
  static EpsilonSchedule Default();
  // "1.0:150,0.5:15,0.1:15"; throws ConfigError.
  static EpsilonSchedule Parse(std::string_view text);

  const std::vector<EpsilonStep>& steps() const { return steps_; }
  int TotalModels() const;

  // Epsilon in force once `unique_count` models have been evaluated, or
  // nullopt when the schedule is exhausted.
  std::optional<double> EpsilonFor(int unique_count) const;

  std::string ToString() const;

  friend bool operator==(const EpsilonSchedule&,
                         const EpsilonSchedule&) = default;

 private:
  std::vector<EpsilonStep> steps_;
};

struct QConfig {
  double alpha = 0.01;
  double gamma = 1.0;
  double q_init = 0.5;
  int replay_samples = 100;
  EpsilonSchedule schedule = EpsilonSchedule::Default();
  std::uint64_t seed = 0;

  void Validate() const;
};

// Sparse (state, action) -> value map; absent entries read as q_init.
class QTable {
 public:
  explicit QTable(double q_init = 0.5) : q_init_(q_init) {}

  double Get(const AgentState& s, const Action& a) const;
  void Set(const AgentState& s, const Action& a, double value);
  bool Contains(const AgentState& s, const Action& a) const;

  double q_init() const { return q_init_; }
  std::size_t size() const { return values_.size(); }

  struct Entry {
    AgentState state;
    Action action;
    double value;
  };
  // Materialized entries sorted by their textual key.
  std::vector<Entry> Entries() const;

  // "<state>|<action>" as used in snapshots, e.g. "START@0,1,0|C(64,3,1)".
  static std::string TextKey(const AgentState& s, const Action& a);

  // JSON object mapping TextKey to value, keys sorted.
  std::string ToJson() const;
  // Throws SnapshotError on malformed input.
  static QTable FromJson(std::string_view json, double q_init = 0.5);

  friend bool operator==(const QTable& a, const QTable& b) {
    return a.q_init_ == b.q_init_ && a.values_ == b.values_;
  }

 private:
  struct Key {
    std::uint64_t state;
    std::uint64_t action;
    friend bool operator==(const Key&, const Key&) = default;
  };
  struct KeyHash {
    std::size_t operator()(const Key& k) const {
      std::uint64_t h = k.state * 0x9e3779b97f4a7c15ULL;
      h ^= k.action + 0x7f4a7c159e3779b9ULL + (h << 6) + (h >> 2);
      return static_cast<std::size_t>(h ^ (h >> 29));
    }
  };

  double q_init_;
  std::unordered_map<Key, double, KeyHash> values_;
};

// Legal-action lookup with memoization per state. Not thread-safe; owned by
// whichever thread samples and updates.
class ActionSpace {
 public:
  explicit ActionSpace(SpaceConfig config);

  const SpaceConfig& config() const { return config_; }
  const std::vector<Action>& Legal(const AgentState& state) const;

 private:
  SpaceConfig config_;
  mutable std::unordered_map<std::uint64_t, std::vector<Action>> cache_;
};

// States visited and actions taken; states.front() is the start state and
// actions.back() is a termination, |states| == |actions|.
struct Trajectory {
  std::vector<AgentState> states;
  std::vector<Action> actions;

  friend bool operator==(const Trajectory&, const Trajectory&) = default;
};

struct Episode {
  Trajectory trajectory;
  double accuracy = 0.0;
};

Architecture ToArchitecture(const Trajectory& trajectory);

// Rebuilds the trajectory an architecture string came from. Throws
// ValidationError when the architecture is illegal.
Trajectory TrajectoryFromArchitecture(const Architecture& arch,
                                      const SpaceConfig& config);

// Epsilon-greedy walk from the start state until a termination action.
// Greedy ties are broken uniformly at random.
Trajectory SampleNewNetwork(double epsilon, const QTable& q,
                            std::mt19937_64& rng, const ActionSpace& space);

// Terminal pair moves toward `accuracy`, then each earlier pair toward the
// best value of its successor state, walking backwards.
void UpdateQValues(QTable& q, const Trajectory& trajectory, double accuracy,
                   const ActionSpace& space, const QConfig& config);

}  // namespace metaqnn

#endif  // METAQNN_QLEARNING_H_
