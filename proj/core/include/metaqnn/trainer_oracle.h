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

#ifndef METAQNN_TRAINER_ORACLE_H_
#define METAQNN_TRAINER_ORACLE_H_

#include <atomic>
#include <chrono>
#include <cstdint>
#include <future>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>

#include "metaqnn/channel.h"
#include "metaqnn/oracle.h"
#include "metaqnn/protocol.h"

namespace metaqnn {

struct TrainerSettings {
  std::string dataset = "cifar10";
  int input_size = 32;
  int input_channels = 3;
  int num_classes = 10;
  int epochs = 20;
  std::chrono::milliseconds timeout{std::chrono::hours(2)};
  std::chrono::milliseconds handshake_timeout{std::chrono::seconds(30)};
};

// Delegates evaluation to an external worker over the line protocol.
// Several threads may call Evaluate concurrently; responses are matched to
// requests by id and may arrive in any order.
class TrainerOracle : public RewardOracle {
 public:
  // Performs the hello exchange. Throws OracleUnavailableError.
  TrainerOracle(std::unique_ptr<LineChannel> channel, TrainerSettings settings);
  // Sends shutdown and joins the reader.
  ~TrainerOracle() override;

  TrainerOracle(const TrainerOracle&) = delete;
  TrainerOracle& operator=(const TrainerOracle&) = delete;

  // Timeouts raise a retriable EvaluationError, malformed or out-of-range
  // replies raise protocol::ProtocolError, worker-reported failures raise a
  // non-retriable EvaluationError carrying the worker's message, and a dead
  // channel raises OracleUnavailableError.
  double Evaluate(const Architecture& arch) override;

  std::uint64_t requests_sent() const { return next_id_ - 1; }

 private:
  void ReaderLoop();
  void FailAll(std::exception_ptr error);

  std::unique_ptr<LineChannel> channel_;
  TrainerSettings settings_;

  std::mutex write_mu_;
  std::mutex pending_mu_;
  std::map<std::uint64_t, std::promise<protocol::EvaluateResponse>> pending_;
  std::exception_ptr closed_error_;  // guarded by pending_mu_

  std::atomic<std::uint64_t> next_id_{1};
  std::atomic<bool> stop_{false};
  std::thread reader_;
};

}  // namespace metaqnn

#endif  // METAQNN_TRAINER_ORACLE_H_
