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

#include "metaqnn/search.h"

#include <algorithm>
#include <atomic>
#include <condition_variable>
#include <ctime>
#include <deque>
#include <exception>
#include <mutex>
#include <thread>
#include <unordered_map>

#include "json.hpp"

namespace metaqnn {
namespace {

using nlohmann::json;
using ordered = nlohmann::ordered_json;

std::string UtcNow() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                      now.time_since_epoch())
                      .count() %
                  1000;
  std::tm tm{};
  ::gmtime_r(&t, &tm);
  char buf[96];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ",
                tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday, tm.tm_hour,
                tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

std::uint64_t Mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Sampling, Q updates, replay memory and the dictionary are only touched by
// the thread running Run(); oracle calls may run on worker threads.
class Coordinator {
 public:
  Coordinator(const SpaceConfig& space, const QConfig& qconfig,
              RewardOracle& oracle, const SearchOptions& options,
              SearchState initial)
      : actions_(space),
        qconfig_(qconfig),
        oracle_(oracle),
        options_(options),
        rng_(initial.next_iteration == 0
                 ? qconfig.seed
                 : qconfig.seed ^ Mix(static_cast<std::uint64_t>(
                                      initial.next_iteration))) {
    result_.state = std::move(initial);
  }

  SearchResult Run();

 private:
  struct Pending {
    Trajectory trajectory;
    double epsilon;
  };
  struct Completion {
    std::string arch;
    std::optional<double> accuracy;
    std::exception_ptr fatal;
  };

  std::optional<double> EvaluateWithRetries(const Architecture& arch);
  void Dispatch(const std::string& key, Architecture arch);
  Completion WaitForCompletion();
  void Apply(const Pending& p, const std::string& arch, double accuracy,
             bool cached);
  void Emit(IterationEvent event);
  void StopWorkers();

  ActionSpace actions_;
  const QConfig& qconfig_;
  RewardOracle& oracle_;
  const SearchOptions& options_;
  std::mt19937_64 rng_;
  SearchResult result_;
  std::int64_t stall_ = 0;
  std::atomic<std::int64_t> invocations_{0};

  // Worker pool, only used when options_.workers > 1.
  std::mutex mu_;
  std::condition_variable jobs_cv_;
  std::condition_variable done_cv_;
  std::deque<std::pair<std::string, Architecture>> jobs_;
  std::deque<Completion> done_;
  bool shutting_down_ = false;
  std::vector<std::thread> workers_;
};

std::optional<double> Coordinator::EvaluateWithRetries(
    const Architecture& arch) {
  for (int attempt = 0;; ++attempt) {
    try {
      ++invocations_;
      const double acc = oracle_.Evaluate(arch);
      if (!(acc >= 0.0 && acc <= 1.0)) return std::nullopt;
      return acc;
    } catch (const EvaluationError& e) {
      if (!e.retriable() || attempt >= options_.max_retries) {
        return std::nullopt;
      }
    }
  }
}

void Coordinator::Dispatch(const std::string& key, Architecture arch) {
  if (options_.workers <= 1) {
    Completion c{key, std::nullopt, nullptr};
    try {
      c.accuracy = EvaluateWithRetries(arch);
    } catch (...) {
      c.fatal = std::current_exception();
    }
    done_.push_back(std::move(c));
    return;
  }
  if (workers_.empty()) {
    for (int i = 0; i < options_.workers; ++i) {
      workers_.emplace_back([this] {
        while (true) {
          std::pair<std::string, Architecture> job;
          {
            std::unique_lock<std::mutex> lock(mu_);
            jobs_cv_.wait(lock,
                          [this] { return shutting_down_ || !jobs_.empty(); });
            if (jobs_.empty()) return;
            job = std::move(jobs_.front());
            jobs_.pop_front();
          }
          Completion c{job.first, std::nullopt, nullptr};
          try {
            c.accuracy = EvaluateWithRetries(job.second);
          } catch (...) {
            c.fatal = std::current_exception();
          }
          {
            std::lock_guard<std::mutex> lock(mu_);
            done_.push_back(std::move(c));
          }
          done_cv_.notify_one();
        }
      });
    }
  }
  {
    std::lock_guard<std::mutex> lock(mu_);
    jobs_.emplace_back(key, std::move(arch));
  }
  jobs_cv_.notify_one();
}

Coordinator::Completion Coordinator::WaitForCompletion() {
  std::unique_lock<std::mutex> lock(mu_);
  done_cv_.wait(lock, [this] { return !done_.empty(); });
  Completion c = std::move(done_.front());
  done_.pop_front();
  return c;
}

void Coordinator::StopWorkers() {
  {
    std::lock_guard<std::mutex> lock(mu_);
    shutting_down_ = true;
  }
  jobs_cv_.notify_all();
  for (auto& t : workers_) t.join();
  workers_.clear();
}

void Coordinator::Apply(const Pending& p, const std::string& arch,
                        double accuracy, bool cached) {
  auto& state = result_.state;
  state.replay_memory.push_back({p.trajectory, accuracy});
  UpdateQValues(state.q, p.trajectory, accuracy, actions_, qconfig_);
  if (!state.replay_memory.empty()) {
    std::uniform_int_distribution<std::size_t> pick(
        0, state.replay_memory.size() - 1);
    for (int k = 0; k < qconfig_.replay_samples; ++k) {
      const Episode& e = state.replay_memory[pick(rng_)];
      UpdateQValues(state.q, e.trajectory, e.accuracy, actions_, qconfig_);
    }
  }
  IterationEvent event;
  event.epsilon = p.epsilon;
  event.arch = arch;
  event.accuracy = accuracy;
  event.cached = cached;
  Emit(std::move(event));
}

void Coordinator::Emit(IterationEvent event) {
  auto& state = result_.state;
  event.iteration = state.next_iteration++;
  if (options_.wall_clock_timestamps) event.timestamp = UtcNow();
  if (options_.on_event) options_.on_event(event);
  result_.log.push_back(std::move(event));
  if (options_.checkpoint_every > 0 && options_.on_checkpoint &&
      state.next_iteration % options_.checkpoint_every == 0) {
    options_.on_checkpoint(state);
  }
}

SearchResult Coordinator::Run() {
  auto& state = result_.state;
  const auto& schedule = qconfig_.schedule;
  const int capacity = std::max(1, options_.workers);
  // Architectures being evaluated -> episodes that sampled them, first one
  // is the episode that triggered the evaluation.
  std::unordered_map<std::string, std::vector<Pending>> in_flight;
  std::exception_ptr fatal;

  while (true) {
    while (!fatal && static_cast<int>(in_flight.size()) < capacity) {
      const auto epsilon = schedule.EpsilonFor(
          state.unique_models + static_cast<int>(in_flight.size()));
      if (!epsilon) break;
      if (stall_ >= options_.max_stall_iterations) {
        result_.stalled = true;
        break;
      }
      Pending p{SampleNewNetwork(*epsilon, state.q, rng_, actions_),
                *epsilon};
      Architecture arch = ToArchitecture(p.trajectory);
      std::string key = Serialize(arch);
      if (const DictionaryEntry* hit = state.dictionary.Find(key)) {
        ++stall_;
        Apply(p, key, hit->accuracy, /*cached=*/true);
        continue;
      }
      if (auto it = in_flight.find(key); it != in_flight.end()) {
        it->second.push_back(std::move(p));
        break;  // wait for that result instead of spinning on it
      }
      in_flight[key].push_back(std::move(p));
      Dispatch(key, std::move(arch));
    }
    if (in_flight.empty()) break;

    Completion c = WaitForCompletion();
    auto node = in_flight.extract(c.arch);
    if (c.fatal) {
      if (!fatal) fatal = c.fatal;
      if (in_flight.empty()) break;
      continue;
    }
    if (fatal) continue;  // draining
    std::vector<Pending>& waiters = node.mapped();
    if (!c.accuracy) {
      ++stall_;
      for (const auto& p : waiters) {
        IterationEvent event;
        event.epsilon = p.epsilon;
        event.arch = c.arch;
        event.status = EvalStatus::kFailed;
        Emit(std::move(event));
      }
      continue;
    }
    state.dictionary.Insert(c.arch, {*c.accuracy, state.next_iteration});
    ++state.unique_models;
    stall_ = 0;
    for (std::size_t i = 0; i < waiters.size(); ++i) {
      Apply(waiters[i], c.arch, *c.accuracy, /*cached=*/i > 0);
    }
  }

  StopWorkers();
  result_.oracle_invocations = invocations_;
  if (fatal) std::rethrow_exception(fatal);
  if (options_.on_checkpoint) options_.on_checkpoint(state);
  return std::move(result_);
}

}  // namespace

std::string IterationEvent::ToJsonLine() const {
  ordered j;
  j["iteration"] = iteration;
  j["epsilon"] = epsilon;
  j["arch"] = arch;
  j["accuracy"] = accuracy ? ordered(*accuracy) : ordered(nullptr);
  j["cached"] = cached;
  j["status"] = status == EvalStatus::kOk ? "ok" : "failed";
  j["timestamp"] = timestamp ? ordered(*timestamp) : ordered(nullptr);
  return j.dump();
}

IterationEvent IterationEvent::FromJsonLine(std::string_view line) {
  try {
    const json j = json::parse(line);
    IterationEvent e;
    e.iteration = j.at("iteration").get<std::int64_t>();
    e.epsilon = j.at("epsilon").get<double>();
    e.arch = j.at("arch").get<std::string>();
    if (const auto& a = j.at("accuracy"); !a.is_null()) {
      e.accuracy = a.get<double>();
    }
    e.cached = j.at("cached").get<bool>();
    const auto status = j.at("status").get<std::string>();
    if (status == "ok") {
      e.status = EvalStatus::kOk;
    } else if (status == "failed") {
      e.status = EvalStatus::kFailed;
    } else {
      throw std::invalid_argument("unknown status '" + status + "'");
    }
    if (e.status == EvalStatus::kOk && !e.accuracy) {
      throw std::invalid_argument("ok event without accuracy");
    }
    if (const auto it = j.find("timestamp"); it != j.end() && !it->is_null()) {
      e.timestamp = it->get<std::string>();
    }
    return e;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed event: ") + e.what());
  }
}

std::vector<IterationEvent> ReadEventLog(std::istream& in) {
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) {
      lines.push_back(std::move(line));
    }
  }
  std::vector<IterationEvent> events;
  events.reserve(lines.size());
  for (std::size_t i = 0; i < lines.size(); ++i) {
    try {
      events.push_back(IterationEvent::FromJsonLine(lines[i]));
    } catch (const std::invalid_argument& e) {
      if (i + 1 == lines.size()) break;  // truncated tail
      throw std::invalid_argument("event log line " + std::to_string(i + 1) +
                                  ": " + e.what());
    }
  }
  return events;
}

const DictionaryEntry* ReplayDictionary::Find(const std::string& arch) const {
  const auto it = entries_.find(arch);
  return it == entries_.end() ? nullptr : &it->second;
}

bool ReplayDictionary::Insert(const std::string& arch, DictionaryEntry entry) {
  return entries_.emplace(arch, entry).second;
}

std::string ReplayDictionary::ToJson() const {
  json j = json::object();
  for (const auto& [arch, e] : entries_) {
    j[arch] = {{"accuracy", e.accuracy}, {"first_iteration", e.first_iteration}};
  }
  return j.dump(1);
}

ReplayDictionary ReplayDictionary::FromJson(std::string_view text) {
  ReplayDictionary d;
  try {
    const json j = json::parse(text);
    if (!j.is_object()) throw std::invalid_argument("not a JSON object");
    for (const auto& [arch, e] : j.items()) {
      d.Insert(arch, {e.at("accuracy").get<double>(),
                      e.at("first_iteration").get<std::int64_t>()});
    }
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed dictionary: ") +
                                e.what());
  }
  return d;
}

SearchState ResumeState(const std::vector<IterationEvent>& events,
                        std::optional<QTable> q, const SpaceConfig& space,
                        const QConfig& qconfig) {
  SearchState state;
  const bool replay_updates = !q.has_value();
  state.q = q ? std::move(*q) : QTable(qconfig.q_init);
  const ActionSpace actions(space);
  for (const auto& e : events) {
    state.next_iteration = std::max(state.next_iteration, e.iteration + 1);
    if (e.status != EvalStatus::kOk) continue;
    Trajectory t = TrajectoryFromArchitecture(Parse(e.arch), space);
    if (state.dictionary.Insert(e.arch, {*e.accuracy, e.iteration})) {
      ++state.unique_models;
    }
    if (replay_updates) {
      UpdateQValues(state.q, t, *e.accuracy, actions, qconfig);
    }
    state.replay_memory.push_back({std::move(t), *e.accuracy});
  }
  return state;
}

SearchResult RunSearch(const SpaceConfig& space, const QConfig& qconfig,
                       RewardOracle& oracle, const SearchOptions& options,
                       SearchState initial) {
  space.Validate();
  qconfig.Validate();
  if (options.workers < 1) throw ConfigError("workers must be >= 1");
  if (options.max_retries < 0) throw ConfigError("max_retries must be >= 0");
  Coordinator coordinator(space, qconfig, oracle, options, std::move(initial));
  return coordinator.Run();
}

SearchResult RunSearch(const SpaceConfig& space, const QConfig& qconfig,
                       RewardOracle& oracle, const SearchOptions& options) {
  SearchState initial;
  initial.q = QTable(qconfig.q_init);
  return RunSearch(space, qconfig, oracle, options, std::move(initial));
}

std::vector<RankedModel> TopModels(const ReplayDictionary& dictionary,
                                   const SpaceConfig& space, std::size_t k) {
  std::vector<RankedModel> models;
  models.reserve(dictionary.size());
  for (const auto& [arch, e] : dictionary.entries()) {
    std::int64_t params = -1;
    try {
      params = ParamCount(Parse(arch), space);
    } catch (const std::exception&) {
    }
    models.push_back({arch, e.accuracy, params});
  }
  std::sort(models.begin(), models.end(),
            [](const RankedModel& a, const RankedModel& b) {
              if (a.accuracy != b.accuracy) return a.accuracy > b.accuracy;
              if (a.params != b.params) return a.params < b.params;
              return a.arch < b.arch;
            });
  if (models.size() > k) models.resize(k);
  return models;
}

}  // namespace metaqnn
