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

#include "metaqnn/trainer_oracle.h"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <future>
#include <thread>

#include "metaqnn/search.h"

namespace metaqnn {
namespace {

using namespace std::chrono_literals;

const Architecture kArch = Parse("[C(64,3,1), P(2,2), SM(10)]");
const Architecture kOther = Parse("[C(128,5,1), SM(10)]");

std::string Worker(const std::string& mode, const std::string& extra = "") {
  std::string cmd = std::string(METAQNN_FAKE_TRAINER) + " " + mode;
  if (!extra.empty()) cmd += " " + extra;
  return cmd;
}

TrainerSettings FastSettings() {
  TrainerSettings s;
  s.timeout = 5s;
  s.handshake_timeout = 5s;
  return s;
}

std::unique_ptr<TrainerOracle> Spawn(const std::string& mode,
                                     TrainerSettings s = FastSettings()) {
  return std::make_unique<TrainerOracle>(
      std::make_unique<SubprocessChannel>(Worker(mode)), s);
}

TEST(FdLineChannelTest, SplitsLinesAndTimesOut) {
  int fds[2];
  ASSERT_EQ(::pipe(fds), 0);
  FdLineChannel reader(fds[0], -1);
  ASSERT_EQ(::write(fds[1], "ab", 2), 2);
  EXPECT_FALSE(reader.ReadLine(20ms));
  ASSERT_EQ(::write(fds[1], "c\nd\n", 4), 4);
  EXPECT_EQ(reader.ReadLine(20ms), "abc");
  EXPECT_EQ(reader.ReadLine(20ms), "d");
  ::close(fds[1]);
  EXPECT_THROW(reader.ReadLine(20ms), ChannelClosedError);
}

TEST(TrainerOracleTest, EvaluatesOverSubprocess) {
  auto oracle = Spawn("ok");
  const double a = oracle->Evaluate(kArch);
  EXPECT_GE(a, 0.0);
  EXPECT_LE(a, 1.0);
  EXPECT_EQ(oracle->Evaluate(kArch), a);
  EXPECT_EQ(oracle->requests_sent(), 2u);
}

TEST(TrainerOracleTest, OutOfOrderResponsesMatchById) {
  auto reference = Spawn("ok");
  const double a = reference->Evaluate(kArch);
  const double b = reference->Evaluate(kOther);
  ASSERT_NE(a, b);

  auto oracle = Spawn("reorder");
  auto fa = std::async(std::launch::async, [&] { return oracle->Evaluate(kArch); });
  std::this_thread::sleep_for(50ms);
  auto fb =
      std::async(std::launch::async, [&] { return oracle->Evaluate(kOther); });
  EXPECT_EQ(fa.get(), a);
  EXPECT_EQ(fb.get(), b);
}

TEST(TrainerOracleTest, OutOfRangeAccuracyIsProtocolError) {
  auto oracle = Spawn("range");
  EXPECT_THROW(oracle->Evaluate(kArch), protocol::ProtocolError);
}

TEST(TrainerOracleTest, WorkerFailureIsNotRetriable) {
  auto oracle = Spawn("fail");
  try {
    oracle->Evaluate(kArch);
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_FALSE(e.retriable());
    EXPECT_NE(std::string(e.what()).find("restarts exhausted"),
              std::string::npos);
  }
}

TEST(TrainerOracleTest, MalformedReplyIsProtocolError) {
  TrainerSettings s = FastSettings();
  s.timeout = 1s;
  auto oracle = Spawn("malformed", s);
  EXPECT_THROW(oracle->Evaluate(kArch), protocol::ProtocolError);
}

TEST(TrainerOracleTest, TimeoutIsRetriable) {
  TrainerSettings s = FastSettings();
  s.timeout = 150ms;
  auto oracle = Spawn("silent", s);
  try {
    oracle->Evaluate(kArch);
    FAIL();
  } catch (const EvaluationError& e) {
    EXPECT_TRUE(e.retriable());
  }
}

TEST(TrainerOracleTest, CrashedWorkerIsUnavailable) {
  auto oracle = Spawn("crash");
  EXPECT_THROW(oracle->Evaluate(kArch), OracleUnavailableError);
  EXPECT_THROW(oracle->Evaluate(kArch), OracleUnavailableError);
}

TEST(TrainerOracleTest, HandshakeFailures) {
  EXPECT_THROW(Spawn("nohello"), OracleUnavailableError);
  EXPECT_THROW(Spawn("badhello"), OracleUnavailableError);
  EXPECT_THROW(TrainerOracle(std::make_unique<SubprocessChannel>(
                                 "/nonexistent/trainer-binary"),
                             FastSettings()),
               OracleUnavailableError);
}

// Minimal single-connection TCP worker running in-process.
class TcpWorker {
 public:
  TcpWorker() {
    listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    addr.sin_port = 0;
    EXPECT_EQ(::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr),
                     sizeof(addr)),
              0);
    EXPECT_EQ(::listen(listen_fd_, 1), 0);
    socklen_t len = sizeof(addr);
    ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
    port_ = ntohs(addr.sin_port);
    thread_ = std::thread([this] { Serve(); });
  }
  ~TcpWorker() {
    thread_.join();
    ::close(listen_fd_);
  }

  std::string address() const { return "127.0.0.1:" + std::to_string(port_); }
  int requests() const { return requests_; }

 private:
  void Serve() {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) return;
    FdLineChannel ch(fd, fd);
    try {
      while (true) {
        const auto line = ch.ReadLine(5s);
        if (!line) return;
        const auto msg = protocol::Decode(*line);
        if (std::holds_alternative<protocol::Hello>(msg)) {
          ch.WriteLine(protocol::Encode(protocol::Hello{}));
        } else if (const auto* req =
                       std::get_if<protocol::EvaluateRequest>(&msg)) {
          ++requests_;
          protocol::EvaluateResponse r;
          r.id = req->id;
          r.accuracy = 0.25 + 0.01 * static_cast<double>(req->arch.size() % 10);
          ch.WriteLine(protocol::Encode(r));
        } else {
          return;
        }
      }
    } catch (const ChannelClosedError&) {
    }
  }

  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<int> requests_{0};
  std::thread thread_;
};

TEST(TrainerOracleTest, EvaluatesOverTcp) {
  TcpWorker worker;
  {
    TrainerOracle oracle(ConnectTcp(worker.address()), FastSettings());
    const double a = oracle.Evaluate(kArch);
    EXPECT_DOUBLE_EQ(
        a, 0.25 + 0.01 * static_cast<double>(Serialize(kArch).size() % 10));
  }
  EXPECT_EQ(worker.requests(), 1);
}

TEST(TrainerOracleTest, UnreachableTcpAddress) {
  EXPECT_THROW(ConnectTcp("127.0.0.1:1"), ChannelClosedError);
  EXPECT_THROW(ConnectTcp("no-port"), ChannelClosedError);
}

// The worker is asked exactly once per distinct architecture.
TEST(TrainerOracleTest, SearchCallsWorkerOncePerUniqueModel) {
  const auto count_file =
      std::filesystem::temp_directory_path() /
      ("metaqnn_fake_count_" + std::to_string(::getpid()));
  SpaceConfig space;
  space.max_depth = 2;
  space.conv_fields = {3};
  space.conv_filters = {64};
  space.pool_variants = {{2, 2}};
  QConfig q;
  q.schedule = EpsilonSchedule::Parse("1.0:6,0.1:4");
  q.replay_samples = 5;
  q.seed = 4;
  SearchResult result;
  {
    TrainerOracle oracle(std::make_unique<SubprocessChannel>(
                             Worker("ok", count_file.string())),
                         FastSettings());
    result = RunSearch(space, q, oracle, SearchOptions{});
    EXPECT_EQ(oracle.requests_sent(), result.state.dictionary.size());
  }
  EXPECT_EQ(result.state.unique_models, 10);
  std::ifstream in(count_file);
  std::size_t seen = 0;
  ASSERT_TRUE(in >> seen);
  EXPECT_EQ(seen, result.state.dictionary.size());
  std::filesystem::remove(count_file);
}

}  // namespace
}  // namespace metaqnn
