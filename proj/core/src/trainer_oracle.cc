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

#include <variant>

namespace metaqnn {

using namespace std::chrono_literals;

TrainerOracle::TrainerOracle(std::unique_ptr<LineChannel> channel,
                             TrainerSettings settings)
    : channel_(std::move(channel)), settings_(std::move(settings)) {
  try {
    channel_->WriteLine(protocol::Encode(protocol::Hello{}));
    const auto deadline =
        std::chrono::steady_clock::now() + settings_.handshake_timeout;
    while (true) {
      const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
          deadline - std::chrono::steady_clock::now());
      if (left.count() <= 0) {
        throw OracleUnavailableError("trainer did not answer hello in time");
      }
      const auto line = channel_->ReadLine(left);
      if (!line) continue;
      const auto msg = protocol::Decode(*line);
      const auto* hello = std::get_if<protocol::Hello>(&msg);
      if (hello == nullptr) {
        throw OracleUnavailableError("trainer sent '" + *line +
                                     "' instead of hello");
      }
      if (hello->protocol != protocol::kVersion) {
        throw OracleUnavailableError("trainer speaks protocol " +
                                     std::to_string(hello->protocol));
      }
      break;
    }
  } catch (const ChannelClosedError& e) {
    throw OracleUnavailableError(std::string("trainer unavailable: ") +
                                 e.what());
  } catch (const protocol::ProtocolError& e) {
    throw OracleUnavailableError(std::string("trainer handshake failed: ") +
                                 e.what());
  }
  reader_ = std::thread([this] { ReaderLoop(); });
}

TrainerOracle::~TrainerOracle() {
  stop_ = true;
  try {
    std::lock_guard<std::mutex> lock(write_mu_);
    channel_->WriteLine(protocol::Encode(protocol::Shutdown{}));
  } catch (const std::exception&) {
    // Worker already gone.
  }
  if (reader_.joinable()) reader_.join();
  FailAll(std::make_exception_ptr(
      OracleUnavailableError("trainer oracle shut down")));
}

void TrainerOracle::FailAll(std::exception_ptr error) {
  std::lock_guard<std::mutex> lock(pending_mu_);
  if (!closed_error_) closed_error_ = error;
  for (auto& [id, promise] : pending_) promise.set_exception(error);
  pending_.clear();
}

void TrainerOracle::ReaderLoop() {
  while (!stop_) {
    std::optional<std::string> line;
    try {
      line = channel_->ReadLine(100ms);
    } catch (const ChannelClosedError& e) {
      FailAll(std::make_exception_ptr(OracleUnavailableError(
          std::string("trainer channel closed: ") + e.what())));
      return;
    }
    if (!line || line->empty()) continue;

    protocol::Message msg;
    try {
      msg = protocol::Decode(*line);
    } catch (const protocol::ProtocolError& e) {
      const auto id = protocol::PeekId(*line);
      std::lock_guard<std::mutex> lock(pending_mu_);
      if (id) {
        if (auto it = pending_.find(*id); it != pending_.end()) {
          it->second.set_exception(std::make_exception_ptr(e));
          pending_.erase(it);
        }
      } else {
        for (auto& [_, promise] : pending_) {
          promise.set_exception(std::make_exception_ptr(e));
        }
        pending_.clear();
      }
      continue;
    }

    if (std::holds_alternative<protocol::Shutdown>(msg)) {
      FailAll(std::make_exception_ptr(
          OracleUnavailableError("trainer sent shutdown")));
      return;
    }
    const auto* response = std::get_if<protocol::EvaluateResponse>(&msg);
    if (response == nullptr) continue;  // stray hello or echo
    std::lock_guard<std::mutex> lock(pending_mu_);
    if (auto it = pending_.find(response->id); it != pending_.end()) {
      it->second.set_value(*response);
      pending_.erase(it);
    }
  }
}

double TrainerOracle::Evaluate(const Architecture& arch) {
  protocol::EvaluateRequest request;
  request.id = next_id_++;
  request.arch = Serialize(arch);
  request.dataset = settings_.dataset;
  request.input_size = settings_.input_size;
  request.input_channels = settings_.input_channels;
  request.num_classes = settings_.num_classes;
  request.epochs = settings_.epochs;

  std::future<protocol::EvaluateResponse> future;
  {
    std::lock_guard<std::mutex> lock(pending_mu_);
    if (closed_error_) std::rethrow_exception(closed_error_);
    future = pending_[request.id].get_future();
  }
  try {
    std::lock_guard<std::mutex> lock(write_mu_);
    channel_->WriteLine(protocol::Encode(request));
  } catch (const ChannelClosedError& e) {
    std::lock_guard<std::mutex> lock(pending_mu_);
    pending_.erase(request.id);
    throw OracleUnavailableError(std::string("trainer channel closed: ") +
                                 e.what());
  }

  if (future.wait_for(settings_.timeout) != std::future_status::ready) {
    std::lock_guard<std::mutex> lock(pending_mu_);
    // The reader may have completed it in the meantime.
    if (pending_.erase(request.id) > 0) {
      throw EvaluationError("trainer timed out on request " +
                                std::to_string(request.id),
                            /*retriable=*/true);
    }
  }
  const protocol::EvaluateResponse response = future.get();
  if (response.status == protocol::ResultStatus::kFailed) {
    throw EvaluationError(
        "trainer failed: " + response.message.value_or("no message"),
        /*retriable=*/false);
  }
  const double acc = *response.accuracy;
  if (!(acc >= 0.0 && acc <= 1.0)) {
    throw protocol::ProtocolError("accuracy " + std::to_string(acc) +
                                  " outside [0, 1]");
  }
  return acc;
}

}  // namespace metaqnn
