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

#include <sys/wait.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>

#include "metaqnn/architecture.h"
#include "metaqnn/search.h"

namespace metaqnn {
namespace {

namespace fs = std::filesystem;

struct Outcome {
  int code = -1;
  std::string out;
};

Outcome RunCli(const std::string& args, const std::string& env = "") {
  const std::string cmd =
      env + " " + std::string(METAQNN_CLI) + " " + args + " 2>/dev/null";
  Outcome o;
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) return o;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof(buf), pipe)) > 0) o.out.append(buf, n);
  const int status = ::pclose(pipe);
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return o;
}

std::string Slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::string> Lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("metaqnn_cli_" + std::to_string(::getpid()) + "_" +
            ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string Path(const std::string& name) const {
    return (dir_ / name).string();
  }

  fs::path dir_;
};

constexpr char kRowOne[] =
    "'[C(512,5,1), C(256,3,1), C(256,5,1), C(256,3,1), P(5,3), C(512,3,1), "
    "C(512,5,1), P(2,2), SM(10)]'";
constexpr char kSchedule[] = "--schedule 1.0:40,0.5:10,0.1:10";

TEST_F(CliTest, ValidateAndParams) {
  auto o = RunCli(std::string("validate ") + kRowOne);
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out, "OK\n");

  o = RunCli(std::string("params --convention kernels ") + kRowOne);
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out, "11179520\n");
  o = RunCli(std::string("params ") + kRowOne);
  EXPECT_NEAR(std::stod(o.out), 11.18e6, 0.03 * 11.18e6);

  o = RunCli("params '[C(64,1,1), SM(10)]'");
  EXPECT_EQ(o.out, "655626\n");

  o = RunCli("validate '[P(2,2), P(2,2), SM(10)]'");
  EXPECT_EQ(o.code, 1);
  EXPECT_NE(o.out.find("rule c"), std::string::npos);
}

TEST_F(CliTest, ParseFailureExitsFive) {
  EXPECT_EQ(RunCli("validate '[C(64,x,1)]'").code, 5);
  EXPECT_EQ(RunCli("params '[C(64,1,1), SM(10)'").code, 5);
}

TEST_F(CliTest, SearchConfigErrors) {
  EXPECT_EQ(RunCli("search --config " + Path("missing.json")).code, 2);
  EXPECT_EQ(RunCli("search --schedule 1.5:10 --out " + Path("o")).code, 2);
  EXPECT_EQ(RunCli("search --oracle trainer --out " + Path("o")).code, 2);
  EXPECT_EQ(RunCli("search --bogus-flag").code, 2);
  std::ofstream(Path("bad.json")) << R"({"workers": -1})";
  EXPECT_EQ(RunCli("search --config " + Path("bad.json")).code, 2);
}

TEST_F(CliTest, SearchOracleUnreachable) {
  EXPECT_EQ(RunCli("search --oracle trainer --trainer-addr 127.0.0.1:1 --out " +
                Path("o"))
                .code,
            3);
  EXPECT_EQ(RunCli("search --oracle trainer --trainer-cmd '" +
                std::string(METAQNN_FAKE_TRAINER) + " nohello' --out " +
                Path("o"))
                .code,
            3);
}

TEST_F(CliTest, SearchWritesArtifactsDeterministically) {
  const std::string common = std::string(kSchedule) + " --seed 7 --workers 1";
  ASSERT_EQ(RunCli("search " + common + " --out " + Path("a")).code, 0);
  ASSERT_EQ(RunCli("search " + common + " --out " + Path("b")).code, 0);
  for (const char* f : {"events.ndjson", "qtable.json",
                        "replay_dictionary.json", "top_models.csv"}) {
    EXPECT_TRUE(fs::exists(dir_ / "a" / f)) << f;
    EXPECT_EQ(Slurp(dir_ / "a" / f), Slurp(dir_ / "b" / f)) << f;
  }
  const auto top = Lines(Slurp(dir_ / "a" / "top_models.csv"));
  ASSERT_EQ(top.size(), 11u);
  EXPECT_EQ(top[0], "rank,arch,accuracy,params");

  std::ifstream log(dir_ / "a" / "events.ndjson");
  const auto events = ReadEventLog(log);
  std::set<std::string> unique;
  for (const auto& e : events) unique.insert(e.arch);
  EXPECT_EQ(unique.size(), 60u);
}

TEST_F(CliTest, SeedFromEnvironment) {
  ASSERT_EQ(RunCli(std::string("search ") + kSchedule + " --seed 11 --out " +
                Path("flag"))
                .code,
            0);
  ASSERT_EQ(
      RunCli(std::string("search ") + kSchedule + " --out " + Path("env"),
          "METAQNN_SEED=11")
          .code,
      0);
  EXPECT_EQ(Slurp(dir_ / "flag" / "events.ndjson"),
            Slurp(dir_ / "env" / "events.ndjson"));
}

TEST_F(CliTest, SearchWithSubprocessTrainer) {
  const std::string cmd = std::string("search --schedule 1.0:8 --seed 2 ") +
                          "--oracle trainer --trainer-cmd '" +
                          METAQNN_FAKE_TRAINER + " ok' --out " + Path("t");
  ASSERT_EQ(RunCli(cmd).code, 0);
  EXPECT_EQ(Lines(Slurp(dir_ / "t" / "top_models.csv")).size(), 9u);
}

TEST_F(CliTest, ResumeFromTruncatedLog) {
  ASSERT_EQ(RunCli(std::string("search ") + kSchedule + " --seed 5 --out " +
                Path("r"))
                .code,
            0);
  const std::string full = Slurp(dir_ / "r" / "events.ndjson");
  std::ofstream(dir_ / "r" / "events.ndjson", std::ios::trunc)
      << full.substr(0, full.size() / 2);
  ASSERT_EQ(RunCli(std::string("search ") + kSchedule +
                " --seed 5 --resume --out " + Path("r"))
                .code,
            0);
  std::ifstream log(dir_ / "r" / "events.ndjson");
  const auto events = ReadEventLog(log);
  std::set<std::string> unique;
  for (std::size_t i = 0; i < events.size(); ++i) {
    EXPECT_EQ(events[i].iteration, static_cast<std::int64_t>(i));
    unique.insert(events[i].arch);
  }
  EXPECT_EQ(unique.size(), 60u);
}

TEST_F(CliTest, SampleCommand) {
  auto o = RunCli("sample -n 0");
  EXPECT_EQ(o.code, 0);
  EXPECT_EQ(o.out, "");

  o = RunCli("sample --epsilon 1 -n 50 --seed 3");
  EXPECT_EQ(o.code, 0);
  const auto lines = Lines(o.out);
  ASSERT_EQ(lines.size(), 50u);
  for (const auto& l : lines) {
    EXPECT_TRUE(Validate(Parse(l), SpaceConfig{}).empty()) << l;
  }

  std::ofstream(Path("q.json"))
      << R"j({"START@0,1,0|C(128,5,1)": 0.9, "C(128,5,1)@1,1,0|SM(10)": 0.9})j";
  o = RunCli("sample --epsilon 0 -n 5 --q " + Path("q.json"));
  EXPECT_EQ(o.code, 0);
  for (const auto& l : Lines(o.out)) EXPECT_EQ(l, "[C(128,5,1), SM(10)]");

  std::ofstream(Path("corrupt.json")) << "{\"START@0";
  EXPECT_EQ(RunCli("sample -n 2 --q " + Path("corrupt.json")).code, 4);
  EXPECT_EQ(RunCli("sample -n 2 --q " + Path("absent.json")).code, 4);
}

TEST_F(CliTest, AnalyzeCommand) {
  ASSERT_EQ(RunCli(std::string("search ") + kSchedule + " --seed 5 --out " +
                Path("s"))
                .code,
            0);
  const auto o = RunCli("analyze --events " + Path("s/events.ndjson") + " --q " +
                     Path("s/qtable.json") + " --out " + Path("an"));
  EXPECT_EQ(o.code, 0);
  const auto per_eps = Lines(Slurp(dir_ / "an" / "per_epsilon.csv"));
  EXPECT_EQ(per_eps.size(), 1u + 3u);
  const auto hist = Lines(Slurp(dir_ / "an" / "histogram.csv"));
  EXPECT_EQ(hist.size(), 1u + 3u * 20u);
  EXPECT_TRUE(fs::exists(dir_ / "an" / "rolling.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "an" / "qsummary_type.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "an" / "qsummary_field.csv"));

  EXPECT_EQ(RunCli("analyze --events " + Path("nope.ndjson")).code, 4);
  EXPECT_EQ(RunCli("analyze --which qsummary").code, 4);
}

}  // namespace
}  // namespace metaqnn
