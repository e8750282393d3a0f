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

#ifndef METAQNN_ARCHITECTURE_H_
#define METAQNN_ARCHITECTURE_H_

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "metaqnn/space.h"

namespace metaqnn {

// Syntax error in an architecture string. offset() is the byte offset of
// the offending character in the input.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " at offset " + std::to_string(offset)),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

struct Architecture {
  std::vector<Layer> layers;

  friend bool operator==(const Architecture&, const Architecture&) = default;
};

// "[C(512,5,1), P(2,2), SM(10)]": terms separated by ", ", no spaces inside
// parentheses. This string is also the replay-dictionary key.
std::string Serialize(const Architecture& arch);

// Accepts the canonical form and tolerates extra whitespace between tokens.
// Does not check parameters against any SpaceConfig; that is Validate's job.
Architecture Parse(std::string_view text);

// Parses a single term such as "C(64,3,1)".
Layer ParseLayer(std::string_view text);

struct Violation {
  std::size_t layer_index;  // index into Architecture::layers
  std::string rule;         // "a".."f", "param", or "structure"
  std::string message;
};

// Replays the architecture from the start state and returns every violation
// found; empty means valid. Never throws.
std::vector<Violation> Validate(const Architecture& arch,
                                const SpaceConfig& config);

class ValidationError : public std::invalid_argument {
 public:
  explicit ValidationError(std::vector<Violation> violations);
  const std::vector<Violation>& violations() const { return violations_; }

 private:
  std::vector<Violation> violations_;
};

// Maps an architecture to the action sequence that produces it; the trailing
// "GAP(K), SM(K)" pair becomes a single GAP termination action. Throws
// ValidationError if the architecture is not valid under `config`.
std::vector<Action> ActionsFromArchitecture(const Architecture& arch,
                                            const SpaceConfig& config);

// Inverse of ActionsFromArchitecture.
Architecture ArchitectureFromActions(const std::vector<Action>& actions);

enum class ParamCounting {
  // Conv, FC and softmax weights plus biases.
  kAllTrainable,
  // Convolution kernel weights only, no biases, no classifier. This is the
  // convention behind the published "# Params" column for the reported
  // CIFAR-10 networks.
  kConvKernels,
};

// Parameters contributed by each layer, same length as arch.layers. Conv
// keeps spatial size, pooling uses PoolOutputSize, the first FC (or SM
// without GAP) flattens size * size * channels, SM after GAP(K) sees K
// inputs. Throws ValidationError for invalid architectures.
std::vector<std::int64_t> LayerParamCounts(
    const Architecture& arch, const SpaceConfig& config,
    ParamCounting counting = ParamCounting::kAllTrainable);

std::int64_t ParamCount(const Architecture& arch, const SpaceConfig& config,
                        ParamCounting counting = ParamCounting::kAllTrainable);

}  // namespace metaqnn

#endif  // METAQNN_ARCHITECTURE_H_
