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

#include <gtest/gtest.h>

namespace metaqnn {
namespace {

TEST(RunConfigTest, EmptyObjectGivesDefaults) {
  const RunConfig c = ParseRunConfig("{}");
  EXPECT_EQ(c.space.max_depth, 11);
  EXPECT_EQ(c.qlearning.alpha, 0.01);
  EXPECT_EQ(c.qlearning.replay_samples, 100);
  EXPECT_EQ(c.qlearning.schedule.TotalModels(), 2700);
  EXPECT_EQ(c.oracle.kind, OracleKind::kSurrogate);
  EXPECT_EQ(c.workers, 1);
  EXPECT_EQ(c.top_k, 10);
}

TEST(RunConfigTest, OverridesAndPreset) {
  const RunConfig c = ParseRunConfig(R"({
    "workers": 3,
    "dataset": "mnist",
    "space": {"preset": "mnist", "max_depth": 6,
              "pool_variants": [[2, 2]]},
    "qlearning": {"seed": 9, "schedule": [[1.0, 10], [0.1, 5]]},
    "oracle": {"kind": "surrogate", "seed": 3, "weights": {"noise": 0.0}}
  })");
  EXPECT_EQ(c.workers, 3);
  EXPECT_EQ(c.space.input_size, 28);
  EXPECT_EQ(c.space.input_channels, 1);
  EXPECT_EQ(c.space.max_depth, 6);
  ASSERT_EQ(c.space.pool_variants.size(), 1u);
  EXPECT_EQ(c.qlearning.seed, 9u);
  EXPECT_EQ(c.qlearning.schedule.TotalModels(), 15);
  EXPECT_EQ(c.oracle.surrogate_seed, 3u);
  EXPECT_EQ(c.oracle.weights.noise, 0.0);
}

TEST(RunConfigTest, ScheduleAsString) {
  const RunConfig c =
      ParseRunConfig(R"({"qlearning": {"schedule": "1.0:150,0.1:15"}})");
  EXPECT_EQ(c.qlearning.schedule.TotalModels(), 165);
}

TEST(RunConfigTest, RejectsBadDocuments) {
  for (const char* doc : {
           "not json",
           "[]",
           R"({"wrokers": 2})",
           R"({"workers": 0})",
           R"({"workers": "2"})",
           R"({"space": {"max_depth": 0}})",
           R"({"space": {"preset": "imagenet"}})",
           R"({"space": {"unknown": 1}})",
           R"({"qlearning": {"alpha": 2}})",
           R"({"qlearning": {"gamma": 0.9}})",
           R"({"qlearning": {"schedule": 5}})",
           R"({"oracle": {"kind": "oracle"}})",
           R"({"oracle": {"kind": "trainer"}})",
       }) {
    EXPECT_THROW(ParseRunConfig(doc), ConfigError) << doc;
  }
}

TEST(RunConfigTest, MissingFile) {
  EXPECT_THROW(LoadRunConfig("/nonexistent/run.json"), ConfigError);
}

TEST(RunConfigTest, CanonicalJsonRoundTrip) {
  RunConfig c;
  c.workers = 2;
  c.space = SpaceConfig::Svhn();
  c.qlearning.schedule = EpsilonSchedule::Parse("1.0:20,0.5:5");
  c.oracle.surrogate_seed = 5;
  const std::string json = RunConfigToJson(c);
  const RunConfig back = ParseRunConfig(json);
  EXPECT_EQ(RunConfigToJson(back), json);
  EXPECT_EQ(back.space.max_depth, 12);
  EXPECT_EQ(back.qlearning.schedule, c.qlearning.schedule);
}

}  // namespace
}  // namespace metaqnn
