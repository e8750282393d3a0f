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

#include "metaqnn/qlearning.h"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace metaqnn {

EpsilonSchedule::EpsilonSchedule(std::vector<EpsilonStep> steps)
    : steps_(std::move(steps)) {
  if (steps_.empty()) throw ConfigError("epsilon schedule must not be empty");
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    const auto& s = steps_[i];
    if (!(s.epsilon >= 0.0 && s.epsilon <= 1.0)) {
      throw ConfigError("epsilon must lie in [0, 1]");
    }
    if (s.unique_models < 1) {
      throw ConfigError("each schedule step needs at least one model");
    }
    if (i > 0 && !(s.epsilon < steps_[i - 1].epsilon)) {
      throw ConfigError("schedule epsilons must be strictly decreasing");
    }
  }
}

EpsilonSchedule EpsilonSchedule::Default() {
  return EpsilonSchedule({{1.0, 1500},
                          {0.9, 100},
                          {0.8, 100},
                          {0.7, 100},
                          {0.6, 150},
                          {0.5, 150},
                          {0.4, 150},
                          {0.3, 150},
                          {0.2, 150},
                          {0.1, 150}});
}

EpsilonSchedule EpsilonSchedule::Parse(std::string_view text) {
  std::vector<EpsilonStep> steps;
  std::string item;
  std::istringstream in{std::string(text)};
  while (std::getline(in, item, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) {
      throw ConfigError("schedule entry '" + item + "' is not eps:count");
    }
    try {
      std::size_t used_eps = 0, used_count = 0;
      const std::string eps_text = item.substr(0, colon);
      const std::string count_text = item.substr(colon + 1);
      EpsilonStep step{std::stod(eps_text, &used_eps),
                       std::stoi(count_text, &used_count)};
      if (used_eps != eps_text.size() || used_count != count_text.size()) {
        throw std::invalid_argument("trailing characters");
      }
      steps.push_back(step);
    } catch (const std::logic_error&) {
      throw ConfigError("schedule entry '" + item + "' is not eps:count");
    }
  }
  return EpsilonSchedule(std::move(steps));
}

int EpsilonSchedule::TotalModels() const {
  int total = 0;
  for (const auto& s : steps_) total += s.unique_models;
  return total;
}

std::optional<double> EpsilonSchedule::EpsilonFor(int unique_count) const {
  int upper = 0;
  for (const auto& s : steps_) {
    upper += s.unique_models;
    if (unique_count < upper) return s.epsilon;
  }
  return std::nullopt;
}

std::string EpsilonSchedule::ToString() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < steps_.size(); ++i) {
    if (i > 0) out << ',';
    out << steps_[i].epsilon << ':' << steps_[i].unique_models;
  }
  return out.str();
}

void QConfig::Validate() const {
  if (!(alpha > 0.0 && alpha <= 1.0)) {
    throw ConfigError("alpha must lie in (0, 1]");
  }
  if (gamma != 1.0) throw ConfigError("gamma is fixed at 1");
  if (!(q_init >= 0.0 && q_init <= 1.0)) {
    throw ConfigError("q_init must lie in [0, 1]");
  }
  if (replay_samples < 0) throw ConfigError("replay_samples must be >= 0");
  if (schedule.steps().empty()) {
    throw ConfigError("epsilon schedule must not be empty");
  }
}

double QTable::Get(const AgentState& s, const Action& a) const {
  const auto it = values_.find(Key{s.Key(), a.Key()});
  return it == values_.end() ? q_init_ : it->second;
}

void QTable::Set(const AgentState& s, const Action& a, double value) {
  values_[Key{s.Key(), a.Key()}] = value;
}

bool QTable::Contains(const AgentState& s, const Action& a) const {
  return values_.count(Key{s.Key(), a.Key()}) > 0;
}

std::string QTable::TextKey(const AgentState& s, const Action& a) {
  return s.ToString() + '|' + a.ToString();
}

std::vector<QTable::Entry> QTable::Entries() const {
  std::vector<std::pair<std::string, Entry>> keyed;
  keyed.reserve(values_.size());
  for (const auto& [key, value] : values_) {
    Entry e{AgentState::FromKey(key.state), Action::FromKey(key.action),
            value};
    keyed.emplace_back(TextKey(e.state, e.action), e);
  }
  std::sort(keyed.begin(), keyed.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  std::vector<Entry> out;
  out.reserve(keyed.size());
  for (auto& [_, e] : keyed) out.push_back(e);
  return out;
}

std::string QTable::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& e : Entries()) j[TextKey(e.state, e.action)] = e.value;
  return j.dump(1);
}

QTable QTable::FromJson(std::string_view json, double q_init) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(json);
  } catch (const nlohmann::json::exception& e) {
    throw SnapshotError(std::string("Q snapshot is not valid JSON: ") +
                        e.what());
  }
  if (!j.is_object()) throw SnapshotError("Q snapshot must be a JSON object");
  QTable q(q_init);
  for (const auto& [key, value] : j.items()) {
    const auto bar = key.find('|');
    if (bar == std::string::npos || !value.is_number()) {
      throw SnapshotError("bad Q snapshot entry '" + key + "'");
    }
    const double v = value.get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
      throw SnapshotError("Q value outside [0, 1] for '" + key + "'");
    }
    try {
      const AgentState s = AgentState::Parse(key.substr(0, bar));
      const Action a{ParseLayer(key.substr(bar + 1))};
      q.Set(s, a, v);
    } catch (const std::exception& e) {
      throw SnapshotError("bad Q snapshot key '" + key + "': " + e.what());
    }
  }
  return q;
}

ActionSpace::ActionSpace(SpaceConfig config) : config_(std::move(config)) {
  config_.Validate();
}

const std::vector<Action>& ActionSpace::Legal(const AgentState& state) const {
  const std::uint64_t key = state.Key();
  auto it = cache_.find(key);
  if (it == cache_.end()) {
    it = cache_.emplace(key, LegalActions(state, config_)).first;
  }
  return it->second;
}

Architecture ToArchitecture(const Trajectory& trajectory) {
  return ArchitectureFromActions(trajectory.actions);
}

Trajectory TrajectoryFromArchitecture(const Architecture& arch,
                                      const SpaceConfig& config) {
  Trajectory t;
  t.actions = ActionsFromArchitecture(arch, config);
  SamplerContext ctx = SamplerContext::Start(config);
  t.states.push_back(ctx.last);
  for (std::size_t i = 0; i + 1 < t.actions.size(); ++i) {
    ctx = ApplyLayer(ctx, t.actions[i].layer, config);
    t.states.push_back(ctx.last);
  }
  return t;
}

Trajectory SampleNewNetwork(double epsilon, const QTable& q,
                            std::mt19937_64& rng, const ActionSpace& space) {
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::vector<std::size_t> best;

  Trajectory t;
  SamplerContext ctx = SamplerContext::Start(space.config());
  t.states.push_back(ctx.last);
  while (true) {
    const auto& legal = space.Legal(ctx.last);
    std::size_t pick = 0;
    if (coin(rng) > epsilon) {
      best.clear();
      double best_value = 0.0;
      for (std::size_t i = 0; i < legal.size(); ++i) {
        const double v = q.Get(ctx.last, legal[i]);
        if (best.empty() || v > best_value) {
          best.assign(1, i);
          best_value = v;
        } else if (v == best_value) {
          best.push_back(i);
        }
      }
      pick = best.size() == 1
                 ? best.front()
                 : best[std::uniform_int_distribution<std::size_t>(
                       0, best.size() - 1)(rng)];
    } else {
      pick = std::uniform_int_distribution<std::size_t>(0, legal.size() - 1)(
          rng);
    }
    const Action action = legal[pick];
    t.actions.push_back(action);
    if (action.IsTermination()) break;
    ctx = ApplyLayer(ctx, action.layer, space.config());
    t.states.push_back(ctx.last);
  }
  return t;
}

void UpdateQValues(QTable& q, const Trajectory& trajectory, double accuracy,
                   const ActionSpace& space, const QConfig& config) {
  if (!(accuracy >= 0.0 && accuracy <= 1.0)) {
    throw RewardRangeError("accuracy " + std::to_string(accuracy) +
                           " outside [0, 1]");
  }
  const auto& S = trajectory.states;
  const auto& U = trajectory.actions;
  if (S.empty() || S.size() != U.size() || !U.back().IsTermination()) {
    throw std::invalid_argument("malformed trajectory");
  }
  const double keep = 1.0 - config.alpha;
  const std::size_t last = S.size() - 1;
  q.Set(S[last], U[last],
        keep * q.Get(S[last], U[last]) + config.alpha * accuracy);
  for (std::size_t i = last; i-- > 0;) {
    double best = 0.0;
    bool first = true;
    for (const auto& u : space.Legal(S[i + 1])) {
      const double v = q.Get(S[i + 1], u);
      if (first || v > best) best = v;
      first = false;
    }
    q.Set(S[i], U[i],
          keep * q.Get(S[i], U[i]) + config.alpha * config.gamma * best);
  }
}

}  // namespace metaqnn
