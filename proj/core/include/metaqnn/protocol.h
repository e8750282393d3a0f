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

#ifndef METAQNN_PROTOCOL_H_
#define METAQNN_PROTOCOL_H_

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "metaqnn/oracle.h"

// Newline-delimited JSON messages exchanged with an external trainer.
//
//   {"type":"hello","protocol":1}
//   {"type":"evaluate","id":7,"arch":"[C(64,3,1), SM(10)]","dataset":"cifar10",
//    "input_size":32,"input_channels":3,"num_classes":10,"budget":{"epochs":20}}
//   {"type":"result","id":7,"status":"ok","accuracy":0.71,"message":null}
//   {"type":"shutdown"}
namespace metaqnn::protocol {

inline constexpr int kVersion = 1;

// Malformed or out-of-contract message. Not retriable.
class ProtocolError : public EvaluationError {
 public:
  explicit ProtocolError(const std::string& what)
      : EvaluationError("protocol error: " + what, /*retriable=*/false) {}
};

struct Hello {
  int protocol = kVersion;
  friend bool operator==(const Hello&, const Hello&) = default;
};

struct EvaluateRequest {
  std::uint64_t id = 0;
  std::string arch;
  std::string dataset;
  int input_size = 0;
  int input_channels = 0;
  int num_classes = 0;
  int epochs = 0;
  friend bool operator==(const EvaluateRequest&,
                         const EvaluateRequest&) = default;
};

enum class ResultStatus { kOk, kFailed };

struct EvaluateResponse {
  std::uint64_t id = 0;
  ResultStatus status = ResultStatus::kOk;
  std::optional<double> accuracy;
  std::optional<std::string> message;
  friend bool operator==(const EvaluateResponse&,
                         const EvaluateResponse&) = default;
};

struct Shutdown {
  friend bool operator==(const Shutdown&, const Shutdown&) = default;
};

using Message = std::variant<Hello, EvaluateRequest, EvaluateResponse, Shutdown>;

// One compact JSON line without the trailing newline; keys in the order
// shown above.
std::string Encode(const Message& message);

// Throws ProtocolError for anything that is not exactly one well-formed
// message.
Message Decode(std::string_view line);

// Best-effort id extraction from a line that failed to decode.
std::optional<std::uint64_t> PeekId(std::string_view line);

}  // namespace metaqnn::protocol

#endif  // METAQNN_PROTOCOL_H_
