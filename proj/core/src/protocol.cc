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

#include "metaqnn/protocol.h"

#include <limits>

#include "json.hpp"

namespace metaqnn::protocol {
namespace {

using ordered = nlohmann::ordered_json;
using nlohmann::json;

const json& Require(const json& j, const char* name) {
  const auto it = j.find(name);
  if (it == j.end()) throw ProtocolError(std::string("missing '") + name + "'");
  return *it;
}

[[noreturn]] void WrongType(const char* name) {
  throw ProtocolError(std::string("field '") + name + "' has the wrong type");
}

std::string String(const json& j, const char* name) {
  const json& v = Require(j, name);
  if (!v.is_string()) WrongType(name);
  return v.get<std::string>();
}

std::uint64_t Unsigned(const json& j, const char* name) {
  const json& v = Require(j, name);
  if (!v.is_number_unsigned()) WrongType(name);
  return v.get<std::uint64_t>();
}

int NonNegativeInt(const json& j, const char* name) {
  const std::uint64_t v = Unsigned(j, name);
  if (v > static_cast<std::uint64_t>(std::numeric_limits<int>::max())) {
    throw ProtocolError(std::string("field '") + name + "' out of range");
  }
  return static_cast<int>(v);
}

}  // namespace

std::string Encode(const Message& message) {
  ordered j;
  std::visit(
      [&j](const auto& m) {
        using T = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<T, Hello>) {
          j["type"] = "hello";
          j["protocol"] = m.protocol;
        } else if constexpr (std::is_same_v<T, EvaluateRequest>) {
          j["type"] = "evaluate";
          j["id"] = m.id;
          j["arch"] = m.arch;
          j["dataset"] = m.dataset;
          j["input_size"] = m.input_size;
          j["input_channels"] = m.input_channels;
          j["num_classes"] = m.num_classes;
          j["budget"] = ordered{{"epochs", m.epochs}};
        } else if constexpr (std::is_same_v<T, EvaluateResponse>) {
          j["type"] = "result";
          j["id"] = m.id;
          j["status"] = m.status == ResultStatus::kOk ? "ok" : "failed";
          j["accuracy"] = m.accuracy ? ordered(*m.accuracy) : ordered(nullptr);
          j["message"] = m.message ? ordered(*m.message) : ordered(nullptr);
        } else {
          j["type"] = "shutdown";
        }
      },
      message);
  return j.dump();
}

Message Decode(std::string_view line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& e) {
    throw ProtocolError(std::string("not JSON: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message is not a JSON object");
  const auto type = String(j, "type");

  if (type == "hello") {
    return Hello{NonNegativeInt(j, "protocol")};
  }
  if (type == "shutdown") {
    return Shutdown{};
  }
  if (type == "evaluate") {
    EvaluateRequest r;
    r.id = Unsigned(j, "id");
    r.arch = String(j, "arch");
    r.dataset = String(j, "dataset");
    r.input_size = NonNegativeInt(j, "input_size");
    r.input_channels = NonNegativeInt(j, "input_channels");
    r.num_classes = NonNegativeInt(j, "num_classes");
    const auto budget = j.find("budget");
    if (budget == j.end() || !budget->is_object()) {
      throw ProtocolError("missing 'budget' object");
    }
    r.epochs = NonNegativeInt(*budget, "epochs");
    return r;
  }
  if (type == "result") {
    EvaluateResponse r;
    r.id = Unsigned(j, "id");
    const auto status = String(j, "status");
    if (status == "ok") {
      r.status = ResultStatus::kOk;
    } else if (status == "failed") {
      r.status = ResultStatus::kFailed;
    } else {
      throw ProtocolError("unknown status '" + status + "'");
    }
    const auto acc = j.find("accuracy");
    if (acc != j.end() && !acc->is_null()) {
      if (!acc->is_number()) throw ProtocolError("accuracy is not a number");
      r.accuracy = acc->get<double>();
    }
    const auto msg = j.find("message");
    if (msg != j.end() && !msg->is_null()) {
      if (!msg->is_string()) throw ProtocolError("message is not a string");
      r.message = msg->get<std::string>();
    }
    if (r.status == ResultStatus::kOk && !r.accuracy) {
      throw ProtocolError("ok result without accuracy");
    }
    return r;
  }
  throw ProtocolError("unknown message type '" + type + "'");
}

std::optional<std::uint64_t> PeekId(std::string_view line) {
  try {
    const json j = json::parse(line);
    const auto it = j.find("id");
    if (it != j.end() && it->is_number_unsigned()) {
      return it->get<std::uint64_t>();
    }
  } catch (const json::exception&) {
  }
  return std::nullopt;
}

}  // namespace metaqnn::protocol
