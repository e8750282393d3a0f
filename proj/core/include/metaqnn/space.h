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

#ifndef METAQNN_SPACE_H_
#define METAQNN_SPACE_H_

#include <compare>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace metaqnn {

// Thrown when a SpaceConfig (or any other configuration value) breaks its
// invariants.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A representation size below 1 was passed to BinOf.
class InvalidSizeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Pooling was requested on a representation smaller than its field.
class DegeneratePoolError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

enum class LayerKind : std::uint8_t {
  kConv,
  kPool,
  kFullyConnected,
  kGlobalAvgPool,
  kSoftmax,
};

// One concrete CNN layer. Unused fields stay zero so that equality and
// hashing are well defined.
//   C(units, field, stride)  convolution; stride is always 1
//   P(field, stride)         max pooling
//   FC(units)                fully connected
//   GAP(units)               global average pooling to `units` classes
//   SM(units)                softmax over `units` classes
struct Layer {
  LayerKind kind = LayerKind::kSoftmax;
  int units = 0;
  int field = 0;
  int stride = 0;

  static Layer Conv(int filters, int field) {
    return {LayerKind::kConv, filters, field, 1};
  }
  static Layer Pool(int field, int stride) {
    return {LayerKind::kPool, 0, field, stride};
  }
  static Layer FullyConnected(int neurons) {
    return {LayerKind::kFullyConnected, neurons, 0, 0};
  }
  static Layer GlobalAvgPool(int classes) {
    return {LayerKind::kGlobalAvgPool, classes, 0, 0};
  }
  static Layer Softmax(int classes) {
    return {LayerKind::kSoftmax, classes, 0, 0};
  }

  bool IsTermination() const {
    return kind == LayerKind::kSoftmax || kind == LayerKind::kGlobalAvgPool;
  }

  // Canonical term, e.g. "C(64,3,1)", "P(2,2)", "FC(512)", "SM(10)".
  std::string ToString() const;

  friend bool operator==(const Layer&, const Layer&) = default;
};

struct PoolVariant {
  int field = 0;
  int stride = 0;

  friend auto operator<=>(const PoolVariant&, const PoolVariant&) = default;
};

struct SpaceConfig {
  // Maximum number of non-termination layers.
  int max_depth = 11;
  std::vector<int> conv_fields{1, 3, 5};
  std::vector<int> conv_filters{64, 128, 256, 512};
  std::vector<PoolVariant> pool_variants{{5, 3}, {3, 2}, {2, 2}};
  std::vector<int> fc_neurons{512, 256, 128};
  int max_consecutive_fc = 2;
  // Strictly descending lower bounds; size >= bin_thresholds[k] and below
  // the previous threshold falls in bin k + 1.
  std::vector<int> bin_thresholds{8, 4, 1};
  int input_size = 32;
  int input_channels = 3;
  int num_classes = 10;

  // Throws ConfigError when an invariant is broken.
  void Validate() const;

  int num_bins() const { return static_cast<int>(bin_thresholds.size()); }

  // Smallest true representation size that maps to `bin` (1-based).
  int BinLowerBound(int bin) const;

  // Dataset presets. CIFAR-10 raises the depth limit to 18; the SVHN and
  // MNIST presets allow 12 layers, the longest networks reported for them.
  static SpaceConfig Cifar10();
  static SpaceConfig Svhn();
  static SpaceConfig Mnist();
  // "cifar10", "svhn", "mnist" or "default"; throws ConfigError otherwise.
  static SpaceConfig Preset(const std::string& name);
};

int BinOf(int size, const SpaceConfig& config);

// floor((size - field) / stride) + 1.
int PoolOutputSize(int size, int field, int stride);

enum class StateKind : std::uint8_t { kStart, kConv, kPool, kFullyConnected };

// Q-table state. Only the representation-size bin is visible here; the exact
// size lives in SamplerContext.
struct AgentState {
  StateKind kind = StateKind::kStart;
  int depth = 0;
  int units = 0;   // conv filters or FC neurons
  int field = 0;   // conv or pool receptive field
  int stride = 0;  // conv (always 1) or pool stride
  int rsize_bin = 1;
  int consecutive_fc = 0;

  static AgentState Start(const SpaceConfig& config);

  // Packs every field into 64 bits. Distinct states give distinct keys as
  // long as SpaceConfig::Validate() accepted the configuration.
  std::uint64_t Key() const;
  static AgentState FromKey(std::uint64_t key);

  // e.g. "START@0,1,0" or "C(64,3,1)@2,1,0": layer term, then depth, bin and
  // consecutive FC count.
  std::string ToString() const;
  static AgentState Parse(const std::string& text);

  friend bool operator==(const AgentState&, const AgentState&) = default;
};

// The layer an action appends. SM and GAP layers mean termination; the GAP
// termination implicitly appends SM as well.
struct Action {
  Layer layer;

  static Action Add(const Layer& layer) { return Action{layer}; }
  static Action TerminateSoftmax(int classes) {
    return Action{Layer::Softmax(classes)};
  }
  static Action TerminateGap(int classes) {
    return Action{Layer::GlobalAvgPool(classes)};
  }

  bool IsTermination() const { return layer.IsTermination(); }
  std::uint64_t Key() const;
  static Action FromKey(std::uint64_t key);
  std::string ToString() const { return layer.ToString(); }

  friend bool operator==(const Action&, const Action&) = default;
};

// Which legality rule an action breaks.
enum class Rule : std::uint8_t {
  kTermination,     // (a) GAP termination after FC
  kMaxDepth,        // (b) only termination at max depth
  kLayerOrder,      // (c) pool after pool
  kFcChain,         // (d) FC successor, chain length, neuron order
  kFcRsize,         // (e) FC only from the small R-size bins
  kReceptiveField,  // (f) field larger than the bin's lower bound
  kParameterSet,    // value outside the configured parameter sets
};

// "a".."f" for the layer rules, "param" for kParameterSet.
const char* RuleTag(Rule rule);

struct RuleViolation {
  Rule rule;
  std::string message;
};

// Checks `action` from `state` against every rule. nullopt means legal.
std::optional<RuleViolation> CheckAction(const AgentState& state,
                                         const Action& action,
                                         const SpaceConfig& config);

// All legal actions in canonical order: Conv by (field, filters), Pool by
// (field, stride), FC by descending neurons, then SM, then GAP.
std::vector<Action> LegalActions(const AgentState& state,
                                 const SpaceConfig& config);

class ConstraintViolationError : public std::logic_error {
 public:
  explicit ConstraintViolationError(RuleViolation violation);
  Rule rule() const { return violation_.rule; }
  const RuleViolation& violation() const { return violation_; }

 private:
  RuleViolation violation_;
};

// Sampler-side view of a partial trajectory: tracks the exact representation
// size that the binned AgentState hides.
struct SamplerContext {
  int true_rsize = 0;
  int depth = 0;
  AgentState last;
  int consecutive_fc = 0;

  static SamplerContext Start(const SpaceConfig& config);
};

// Appends a non-termination layer without any legality check. Throws
// DegeneratePoolError if pooling does not fit the exact size.
SamplerContext ApplyLayer(const SamplerContext& ctx, const Layer& layer,
                          const SpaceConfig& config);

// Applies `action`. Returns nullopt for termination. Throws
// ConstraintViolationError when the action is illegal from ctx.last.
std::optional<SamplerContext> Transition(const SamplerContext& ctx,
                                         const Action& action,
                                         const SpaceConfig& config);

}  // namespace metaqnn

#endif  // METAQNN_SPACE_H_
