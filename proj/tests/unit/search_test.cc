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

#include <gtest/gtest.h>

#include <atomic>
#include <chrono>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace metaqnn {
namespace {

SpaceConfig SmallSpace() {
  SpaceConfig c;
  c.max_depth = 3;
  c.conv_fields = {1, 3};
  c.conv_filters = {64};
  c.pool_variants = {{2, 2}};
  c.fc_neurons = {128};
  return c;
}

QConfig SmallQ(const std::string& schedule, std::uint64_t seed = 1) {
  QConfig q;
  q.schedule = EpsilonSchedule::Parse(schedule);
  q.replay_samples = 10;
  q.seed = seed;
  return q;
}

// Counts calls and optionally misbehaves for chosen architectures.
class ScriptedOracle : public RewardOracle {
 public:
  explicit ScriptedOracle(std::uint64_t seed = 0) : surrogate_(seed) {}

  double Evaluate(const Architecture& arch) override {
    ++calls;
    const std::string key = Serialize(arch);
    {
      std::lock_guard<std::mutex> lock(mu_);
      seen.insert(key);
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    if (key == fail_arch) throw EvaluationError("boom", /*retriable=*/false);
    if (key == flaky_arch) throw EvaluationError("flaky", /*retriable=*/true);
    if (key == out_of_range_arch) return 1.5;
    if (key == unavailable_arch) throw OracleUnavailableError("gone");
    return surrogate_.Evaluate(arch);
  }

  std::atomic<int> calls{0};
  std::set<std::string> seen;
  std::string fail_arch, flaky_arch, out_of_range_arch, unavailable_arch;
  std::chrono::milliseconds delay{0};

 private:
  std::mutex mu_;
  SurrogateOracle surrogate_;
};

std::string LogText(const std::vector<IterationEvent>& log) {
  std::string out;
  for (const auto& e : log) out += e.ToJsonLine() + "\n";
  return out;
}

TEST(IterationEventTest, JsonRoundTrip) {
  IterationEvent ok{3, 0.5, "[SM(10)]", 0.42, true, EvalStatus::kOk, {}};
  EXPECT_EQ(ok.ToJsonLine(),
            R"({"iteration":3,"epsilon":0.5,"arch":"[SM(10)]",)"
            R"("accuracy":0.42,"cached":true,"status":"ok","timestamp":null})");
  EXPECT_EQ(IterationEvent::FromJsonLine(ok.ToJsonLine()), ok);

  IterationEvent failed{4, 1.0, "[SM(10)]", std::nullopt, false,
                        EvalStatus::kFailed, "2026-01-01T00:00:00.000Z"};
  EXPECT_EQ(IterationEvent::FromJsonLine(failed.ToJsonLine()), failed);
  EXPECT_THROW(IterationEvent::FromJsonLine(R"({"iteration":1})"),
               std::invalid_argument);
}

TEST(ReadEventLogTest, DropsTornTailOnly) {
  IterationEvent e{0, 1.0, "[SM(10)]", 0.3, false, EvalStatus::kOk, {}};
  const std::string line = e.ToJsonLine();
  std::istringstream torn(line + "\n" + line + "\n" + line.substr(0, 20));
  EXPECT_EQ(ReadEventLog(torn).size(), 2u);
  std::istringstream bad(line + "\n{oops\n" + line + "\n");
  EXPECT_THROW(ReadEventLog(bad), std::invalid_argument);
}

TEST(ReplayDictionaryTest, InsertOnceAndRoundTrip) {
  ReplayDictionary d;
  EXPECT_TRUE(d.Insert("[SM(10)]", {0.3, 0}));
  EXPECT_FALSE(d.Insert("[SM(10)]", {0.9, 5}));
  EXPECT_EQ(d.Find("[SM(10)]")->accuracy, 0.3);
  EXPECT_EQ(d.Find("[GAP(10), SM(10)]"), nullptr);
  d.Insert("[C(64,1,1), SM(10)]", {0.35, 2});
  EXPECT_EQ(ReplayDictionary::FromJson(d.ToJson()), d);
}

TEST(RunSearchTest, UniqueQuotaAndOracleCalls) {
  const SpaceConfig space = SmallSpace();
  ScriptedOracle oracle;
  const auto r = RunSearch(space, SmallQ("1.0:5"), oracle);
  EXPECT_EQ(r.state.dictionary.size(), 5u);
  EXPECT_EQ(r.state.unique_models, 5);
  EXPECT_EQ(oracle.calls, 5);
  EXPECT_EQ(r.oracle_invocations, 5);
  EXPECT_GE(r.log.size(), 5u);
  EXPECT_EQ(r.state.replay_memory.size(), r.log.size());
  EXPECT_FALSE(r.stalled);
}

TEST(RunSearchTest, CachedEventsReuseStoredAccuracy) {
  const SpaceConfig space = SmallSpace();
  ScriptedOracle oracle;
  const auto r = RunSearch(space, SmallQ("1.0:10,0.1:10"), oracle);
  int cached = 0;
  for (const auto& e : r.log) {
    const auto* entry = r.state.dictionary.Find(e.arch);
    ASSERT_NE(entry, nullptr);
    EXPECT_EQ(*e.accuracy, entry->accuracy);
    if (e.cached) {
      ++cached;
      EXPECT_LT(entry->first_iteration, e.iteration);
    } else {
      EXPECT_EQ(entry->first_iteration, e.iteration);
    }
  }
  EXPECT_GT(cached, 0);
  EXPECT_EQ(oracle.calls, static_cast<int>(r.state.dictionary.size()));
}

TEST(RunSearchTest, SequentialRunsAreDeterministic) {
  const SpaceConfig space = SmallSpace();
  ScriptedOracle o1(7), o2(7);
  const auto a = RunSearch(space, SmallQ("1.0:20,0.5:10,0.1:10", 7), o1);
  const auto b = RunSearch(space, SmallQ("1.0:20,0.5:10,0.1:10", 7), o2);
  EXPECT_EQ(LogText(a.log), LogText(b.log));
  EXPECT_EQ(a.state.q.ToJson(), b.state.q.ToJson());
  ScriptedOracle o3(7);
  const auto c = RunSearch(space, SmallQ("1.0:20,0.5:10,0.1:10", 8), o3);
  EXPECT_NE(LogText(a.log), LogText(c.log));
}

TEST(RunSearchTest, StallsWhenSpaceIsExhausted) {
  SpaceConfig space;
  space.max_depth = 1;
  space.conv_fields = {1};
  space.conv_filters = {64};
  space.pool_variants = {{2, 2}};
  ScriptedOracle oracle;
  SearchOptions options;
  options.max_stall_iterations = 200;
  // SM, GAP, C->SM, C->GAP, P->SM, P->GAP.
  const auto r = RunSearch(space, SmallQ("1.0:50"), oracle, options);
  EXPECT_TRUE(r.stalled);
  EXPECT_EQ(r.state.unique_models, 6);
  EXPECT_EQ(oracle.calls, 6);
}

TEST(RunSearchTest, NonRetriableFailureIsLoggedNotCached) {
  SpaceConfig space = SmallSpace();
  ScriptedOracle oracle;
  oracle.fail_arch = "[SM(10)]";
  oracle.out_of_range_arch = "[GAP(10), SM(10)]";
  const auto r = RunSearch(space, SmallQ("1.0:25"), oracle);
  EXPECT_EQ(r.state.dictionary.Find("[SM(10)]"), nullptr);
  EXPECT_EQ(r.state.dictionary.Find("[GAP(10), SM(10)]"), nullptr);
  int failed = 0;
  for (const auto& e : r.log) {
    if (e.status == EvalStatus::kFailed) {
      ++failed;
      EXPECT_FALSE(e.accuracy);
      EXPECT_TRUE(e.arch == "[SM(10)]" || e.arch == "[GAP(10), SM(10)]");
    }
  }
  EXPECT_GT(failed, 0);
  EXPECT_EQ(r.state.unique_models, 25);
  // Failed episodes never reach the replay memory.
  EXPECT_EQ(r.state.replay_memory.size(), r.log.size() - failed);
}

TEST(RunSearchTest, RetriableFailureIsRetried) {
  SpaceConfig space = SmallSpace();
  ScriptedOracle oracle;
  oracle.flaky_arch = "[SM(10)]";
  SearchOptions options;
  options.max_retries = 2;
  const auto r = RunSearch(space, SmallQ("1.0:25"), oracle, options);
  int flaky_attempts = 0;
  for (const auto& e : r.log) {
    if (e.arch == "[SM(10)]") flaky_attempts += 3;
  }
  EXPECT_EQ(oracle.calls, 25 + flaky_attempts);
  EXPECT_EQ(r.oracle_invocations, oracle.calls);
}

TEST(RunSearchTest, UnavailableOracleAborts) {
  SpaceConfig space = SmallSpace();
  ScriptedOracle oracle;
  oracle.unavailable_arch = "[SM(10)]";
  EXPECT_THROW(RunSearch(space, SmallQ("1.0:1000"), oracle),
               OracleUnavailableError);
}

TEST(RunSearchTest, ConcurrentWorkersKeepCacheContract) {
  const SpaceConfig space = SmallSpace();
  ScriptedOracle oracle;
  oracle.delay = std::chrono::milliseconds(2);
  SearchOptions options;
  options.workers = 4;
  std::int64_t last = -1;
  options.on_event = [&](const IterationEvent& e) {
    EXPECT_EQ(e.iteration, last + 1);
    last = e.iteration;
  };
  const auto r = RunSearch(space, SmallQ("1.0:30,0.3:10"), oracle, options);
  EXPECT_EQ(r.state.unique_models, 40);
  EXPECT_EQ(oracle.calls, 40);
  EXPECT_EQ(oracle.seen.size(), 40u);
  EXPECT_EQ(r.state.dictionary.size(), 40u);
  EXPECT_EQ(last + 1, static_cast<std::int64_t>(r.log.size()));
}

TEST(RunSearchTest, CheckpointsFireOnSchedule) {
  const SpaceConfig space = SmallSpace();
  ScriptedOracle oracle;
  SearchOptions options;
  options.checkpoint_every = 5;
  std::vector<std::int64_t> at;
  options.on_checkpoint = [&](const SearchState& s) {
    at.push_back(s.next_iteration);
  };
  const auto r = RunSearch(space, SmallQ("1.0:12"), oracle, options);
  ASSERT_FALSE(at.empty());
  for (std::size_t i = 0; i + 1 < at.size(); ++i) {
    EXPECT_EQ(at[i], static_cast<std::int64_t>(5 * (i + 1)));
  }
  EXPECT_EQ(at.back(), r.state.next_iteration);
}

TEST(RunSearchTest, TimestampsOnlyWhenEnabled) {
  const SpaceConfig space = SmallSpace();
  ScriptedOracle oracle;
  SearchOptions options;
  const auto plain = RunSearch(space, SmallQ("1.0:3"), oracle, options);
  EXPECT_FALSE(plain.log.front().timestamp);
  options.wall_clock_timestamps = true;
  const auto stamped = RunSearch(space, SmallQ("1.0:3"), oracle, options);
  ASSERT_TRUE(stamped.log.front().timestamp);
  EXPECT_EQ(stamped.log.front().timestamp->size(), 24u);
  EXPECT_EQ(stamped.log.front().timestamp->back(), 'Z');
}

TEST(ResumeStateTest, RebuildsFromLog) {
  const SpaceConfig space = SmallSpace();
  const QConfig q = SmallQ("1.0:15,0.2:15", 3);
  ScriptedOracle oracle;
  const auto full = RunSearch(space, q, oracle);

  const std::vector<IterationEvent> head(full.log.begin(),
                                         full.log.begin() + 12);
  SearchState resumed = ResumeState(head, std::nullopt, space, q);
  EXPECT_EQ(resumed.next_iteration, 12);
  std::set<std::string> unique;
  for (const auto& e : head) unique.insert(e.arch);
  EXPECT_EQ(resumed.unique_models, static_cast<int>(unique.size()));
  EXPECT_EQ(resumed.replay_memory.size(), 12u);
  EXPECT_GT(resumed.q.size(), 0u);

  ScriptedOracle again;
  const auto rest = RunSearch(space, q, again, {}, std::move(resumed));
  EXPECT_EQ(rest.state.unique_models, 30);
  EXPECT_EQ(rest.log.front().iteration, 12);
  EXPECT_EQ(again.calls + static_cast<int>(unique.size()), 30);
  for (const auto& e : rest.log) {
    if (!e.cached) EXPECT_EQ(unique.count(e.arch), 0u) << e.arch;
  }
}

TEST(ResumeStateTest, UsesSnapshotWhenGiven) {
  const SpaceConfig space = SmallSpace();
  const QConfig q = SmallQ("1.0:10", 3);
  ScriptedOracle oracle;
  const auto full = RunSearch(space, q, oracle);
  const SearchState s = ResumeState(full.log, full.state.q, space, q);
  EXPECT_EQ(s.q, full.state.q);
  EXPECT_EQ(s.dictionary.size(), full.state.dictionary.size());
}

TEST(TopModelsTest, OrdersByAccuracyThenParams) {
  const SpaceConfig space;
  ReplayDictionary d;
  d.Insert("[C(512,5,1), SM(10)]", {0.7, 0});
  d.Insert("[C(64,1,1), SM(10)]", {0.7, 1});
  d.Insert("[SM(10)]", {0.9, 2});
  d.Insert("[GAP(10), SM(10)]", {0.1, 3});
  const auto top = TopModels(d, space, 3);
  ASSERT_EQ(top.size(), 3u);
  EXPECT_EQ(top[0].arch, "[SM(10)]");
  EXPECT_EQ(top[1].arch, "[C(64,1,1), SM(10)]");
  EXPECT_EQ(top[1].params, 655626);
  EXPECT_EQ(top[2].arch, "[C(512,5,1), SM(10)]");
  EXPECT_EQ(TopModels(d, space, 10).size(), 4u);
}

}  // namespace
}  // namespace metaqnn
