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

#include "metaqnn/space.h"

#include <algorithm>
#include <functional>
#include <set>
#include <sstream>

#include "metaqnn/architecture.h"

namespace metaqnn {
namespace {

constexpr int kMaxByte = 0xff;
constexpr int kMaxUnits = 0xffff;

void Require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError("invalid space config: " + what);
}

template <typename T>
bool HasDuplicates(std::vector<T> values) {
  std::sort(values.begin(), values.end());
  return std::adjacent_find(values.begin(), values.end()) != values.end();
}

bool Contains(const std::vector<int>& values, int v) {
  return std::find(values.begin(), values.end(), v) != values.end();
}

const char* StateTag(StateKind kind) {
  switch (kind) {
    case StateKind::kStart: return "START";
    case StateKind::kConv: return "C";
    case StateKind::kPool: return "P";
    case StateKind::kFullyConnected: return "FC";
  }
  return "?";
}

std::uint64_t Bits(std::uint64_t value, int shift) { return value << shift; }
int Field(std::uint64_t key, int shift, int width) {
  return static_cast<int>((key >> shift) & ((std::uint64_t{1} << width) - 1));
}

}  // namespace

std::string Layer::ToString() const {
  std::ostringstream out;
  switch (kind) {
    case LayerKind::kConv:
      out << "C(" << units << ',' << field << ',' << stride << ')';
      break;
    case LayerKind::kPool:
      out << "P(" << field << ',' << stride << ')';
      break;
    case LayerKind::kFullyConnected:
      out << "FC(" << units << ')';
      break;
    case LayerKind::kGlobalAvgPool:
      out << "GAP(" << units << ')';
      break;
    case LayerKind::kSoftmax:
      out << "SM(" << units << ')';
      break;
  }
  return out.str();
}

void SpaceConfig::Validate() const {
  Require(max_depth >= 1 && max_depth <= kMaxByte, "max_depth out of range");
  Require(!conv_fields.empty() && !conv_filters.empty() &&
              !pool_variants.empty() && !fc_neurons.empty(),
          "parameter sets must be non-empty");
  for (int f : conv_fields) Require(f >= 1 && f <= kMaxByte, "conv field");
  for (int d : conv_filters) Require(d >= 1 && d <= kMaxUnits, "conv filters");
  for (int d : fc_neurons) Require(d >= 1 && d <= kMaxUnits, "fc neurons");
  for (const auto& p : pool_variants) {
    Require(p.stride >= 1 && p.field >= p.stride && p.field <= kMaxByte,
            "pool variants need field >= stride >= 1");
  }
  Require(!HasDuplicates(conv_fields) && !HasDuplicates(conv_filters) &&
              !HasDuplicates(pool_variants) && !HasDuplicates(fc_neurons),
          "parameter sets must not repeat values");
  Require(max_consecutive_fc >= 0 && max_consecutive_fc <= kMaxByte,
          "max_consecutive_fc out of range");
  Require(!bin_thresholds.empty() &&
              static_cast<int>(bin_thresholds.size()) <= kMaxByte,
          "bin_thresholds must be non-empty");
  for (std::size_t i = 1; i < bin_thresholds.size(); ++i) {
    Require(bin_thresholds[i] < bin_thresholds[i - 1],
            "bin_thresholds must be strictly descending");
  }
  Require(bin_thresholds.back() == 1,
          "the last bin threshold must be 1 so every size has a bin");
  Require(input_size >= 1, "input_size must be positive");
  Require(input_channels >= 1, "input_channels must be positive");
  Require(num_classes >= 1 && num_classes <= kMaxUnits, "num_classes");
}

int SpaceConfig::BinLowerBound(int bin) const {
  if (bin < 1 || bin > num_bins()) {
    throw InvalidSizeError("bin index " + std::to_string(bin) +
                           " out of range");
  }
  return bin_thresholds[bin - 1];
}

SpaceConfig SpaceConfig::Cifar10() {
  SpaceConfig config;
  config.max_depth = 18;
  return config;
}

SpaceConfig SpaceConfig::Svhn() {
  SpaceConfig config;
  config.max_depth = 12;
  return config;
}

SpaceConfig SpaceConfig::Mnist() {
  SpaceConfig config;
  config.max_depth = 12;
  config.input_size = 28;
  config.input_channels = 1;
  return config;
}

SpaceConfig SpaceConfig::Preset(const std::string& name) {
  if (name == "default") return SpaceConfig{};
  if (name == "cifar10") return Cifar10();
  if (name == "svhn") return Svhn();
  if (name == "mnist") return Mnist();
  throw ConfigError("unknown space preset '" + name + "'");
}

int BinOf(int size, const SpaceConfig& config) {
  if (size < 1) {
    throw InvalidSizeError("representation size must be >= 1, got " +
                           std::to_string(size));
  }
  for (int k = 0; k < config.num_bins(); ++k) {
    if (size >= config.bin_thresholds[k]) return k + 1;
  }
  throw InvalidSizeError("representation size " + std::to_string(size) +
                         " is below the smallest bin threshold");
}

int PoolOutputSize(int size, int field, int stride) {
  if (field < 1 || stride < 1) {
    throw DegeneratePoolError("pool field and stride must be positive");
  }
  if (size < field) {
    throw DegeneratePoolError("pool field " + std::to_string(field) +
                              " exceeds representation size " +
                              std::to_string(size));
  }
  return (size - field) / stride + 1;
}

AgentState AgentState::Start(const SpaceConfig& config) {
  AgentState state;
  state.rsize_bin = BinOf(config.input_size, config);
  return state;
}

std::uint64_t AgentState::Key() const {
  return Bits(static_cast<std::uint64_t>(kind), 0) | Bits(depth, 3) |
         Bits(units, 11) | Bits(field, 27) | Bits(stride, 35) |
         Bits(rsize_bin, 43) | Bits(consecutive_fc, 51);
}

AgentState AgentState::FromKey(std::uint64_t key) {
  AgentState s;
  s.kind = static_cast<StateKind>(Field(key, 0, 3));
  s.depth = Field(key, 3, 8);
  s.units = Field(key, 11, 16);
  s.field = Field(key, 27, 8);
  s.stride = Field(key, 35, 8);
  s.rsize_bin = Field(key, 43, 8);
  s.consecutive_fc = Field(key, 51, 8);
  return s;
}

std::string AgentState::ToString() const {
  std::string head;
  switch (kind) {
    case StateKind::kStart: head = StateTag(kind); break;
    case StateKind::kConv: head = Layer::Conv(units, field).ToString(); break;
    case StateKind::kPool: head = Layer::Pool(field, stride).ToString(); break;
    case StateKind::kFullyConnected:
      head = Layer::FullyConnected(units).ToString();
      break;
  }
  return head + '@' + std::to_string(depth) + ',' + std::to_string(rsize_bin) +
         ',' + std::to_string(consecutive_fc);
}

AgentState AgentState::Parse(const std::string& text) {
  const auto at = text.find('@');
  if (at == std::string::npos) {
    throw ParseError("state is missing '@'", 0);
  }
  AgentState s;
  const std::string head = text.substr(0, at);
  if (head != "START") {
    const Layer layer = ParseLayer(head);
    switch (layer.kind) {
      case LayerKind::kConv:
        s.kind = StateKind::kConv;
        s.units = layer.units;
        s.field = layer.field;
        s.stride = layer.stride;
        break;
      case LayerKind::kPool:
        s.kind = StateKind::kPool;
        s.field = layer.field;
        s.stride = layer.stride;
        break;
      case LayerKind::kFullyConnected:
        s.kind = StateKind::kFullyConnected;
        s.units = layer.units;
        break;
      default:
        throw ParseError("termination layers are not states", 0);
    }
  }
  std::istringstream rest(text.substr(at + 1));
  char c1 = 0, c2 = 0;
  if (!(rest >> s.depth >> c1 >> s.rsize_bin >> c2 >> s.consecutive_fc) ||
      c1 != ',' || c2 != ',' || !rest.eof()) {
    throw ParseError("malformed state suffix in '" + text + "'", at + 1);
  }
  return s;
}

std::uint64_t Action::Key() const {
  return Bits(static_cast<std::uint64_t>(layer.kind), 0) |
         Bits(layer.units, 3) | Bits(layer.field, 19) | Bits(layer.stride, 27);
}

Action Action::FromKey(std::uint64_t key) {
  Layer l;
  l.kind = static_cast<LayerKind>(Field(key, 0, 3));
  l.units = Field(key, 3, 16);
  l.field = Field(key, 19, 8);
  l.stride = Field(key, 27, 8);
  return Action{l};
}

const char* RuleTag(Rule rule) {
  switch (rule) {
    case Rule::kTermination: return "a";
    case Rule::kMaxDepth: return "b";
    case Rule::kLayerOrder: return "c";
    case Rule::kFcChain: return "d";
    case Rule::kFcRsize: return "e";
    case Rule::kReceptiveField: return "f";
    case Rule::kParameterSet: return "param";
  }
  return "?";
}

std::optional<RuleViolation> CheckAction(const AgentState& state,
                                         const Action& action,
                                         const SpaceConfig& config) {
  const Layer& l = action.layer;
  const auto fail = [&](Rule rule, std::string msg) {
    return std::optional<RuleViolation>(
        RuleViolation{rule, l.ToString() + " after " + state.ToString() +
                                ": " + std::move(msg)});
  };

  switch (l.kind) {
    case LayerKind::kConv:
      if (!Contains(config.conv_fields, l.field) ||
          !Contains(config.conv_filters, l.units) || l.stride != 1) {
        return fail(Rule::kParameterSet, "conv parameters not in the space");
      }
      break;
    case LayerKind::kPool: {
      const PoolVariant v{l.field, l.stride};
      if (l.units != 0 ||
          std::find(config.pool_variants.begin(), config.pool_variants.end(),
                    v) == config.pool_variants.end()) {
        return fail(Rule::kParameterSet, "pool variant not in the space");
      }
      break;
    }
    case LayerKind::kFullyConnected:
      if (!Contains(config.fc_neurons, l.units)) {
        return fail(Rule::kParameterSet, "FC width not in the space");
      }
      break;
    case LayerKind::kGlobalAvgPool:
    case LayerKind::kSoftmax:
      if (l.units != config.num_classes) {
        return fail(Rule::kParameterSet,
                    "termination must use num_classes = " +
                        std::to_string(config.num_classes));
      }
      break;
  }

  if (action.IsTermination()) {
    if (l.kind == LayerKind::kGlobalAvgPool &&
        state.kind == StateKind::kFullyConnected) {
      return fail(Rule::kTermination,
                  "global average pooling cannot follow an FC layer");
    }
    return std::nullopt;
  }

  if (state.depth >= config.max_depth) {
    return fail(Rule::kMaxDepth, "maximum depth reached, only termination");
  }
  if (state.kind == StateKind::kPool && l.kind == LayerKind::kPool) {
    return fail(Rule::kLayerOrder, "consecutive pooling layers");
  }
  if (state.kind == StateKind::kFullyConnected) {
    if (l.kind != LayerKind::kFullyConnected) {
      return fail(Rule::kFcChain,
                  "FC may only be followed by FC or termination");
    }
    if (state.consecutive_fc >= config.max_consecutive_fc) {
      return fail(Rule::kFcChain, "too many consecutive FC layers");
    }
    if (l.units > state.units) {
      return fail(Rule::kFcChain, "FC neurons increased");
    }
  }
  if (l.kind == LayerKind::kFullyConnected) {
    if (state.rsize_bin < 2) {
      return fail(Rule::kFcRsize,
                  "FC requires a representation-size bin other than the "
                  "largest");
    }
    if (state.kind != StateKind::kFullyConnected &&
        config.max_consecutive_fc < 1) {
      return fail(Rule::kFcChain, "FC layers are disabled");
    }
  }
  if (l.kind == LayerKind::kConv || l.kind == LayerKind::kPool) {
    const int bound = config.BinLowerBound(state.rsize_bin);
    if (l.field > bound) {
      return fail(Rule::kReceptiveField,
                  "receptive field " + std::to_string(l.field) +
                      " exceeds the bin lower bound " + std::to_string(bound));
    }
  }
  return std::nullopt;
}

std::vector<Action> LegalActions(const AgentState& state,
                                 const SpaceConfig& config) {
  std::vector<int> fields = config.conv_fields;
  std::vector<int> filters = config.conv_filters;
  std::vector<PoolVariant> pools = config.pool_variants;
  std::vector<int> neurons = config.fc_neurons;
  std::sort(fields.begin(), fields.end());
  std::sort(filters.begin(), filters.end());
  std::sort(pools.begin(), pools.end());
  std::sort(neurons.begin(), neurons.end(), std::greater<>());

  std::vector<Action> candidates;
  candidates.reserve(fields.size() * filters.size() + pools.size() +
                     neurons.size() + 2);
  for (int f : fields) {
    for (int d : filters) candidates.push_back(Action::Add(Layer::Conv(d, f)));
  }
  for (const auto& p : pools) {
    candidates.push_back(Action::Add(Layer::Pool(p.field, p.stride)));
  }
  for (int d : neurons) {
    candidates.push_back(Action::Add(Layer::FullyConnected(d)));
  }
  candidates.push_back(Action::TerminateSoftmax(config.num_classes));
  candidates.push_back(Action::TerminateGap(config.num_classes));

  std::vector<Action> legal;
  legal.reserve(candidates.size());
  for (const auto& a : candidates) {
    if (!CheckAction(state, a, config)) legal.push_back(a);
  }
  return legal;
}

ConstraintViolationError::ConstraintViolationError(RuleViolation violation)
    : std::logic_error(std::string("rule (") + RuleTag(violation.rule) +
                       ") violated: " + violation.message),
      violation_(std::move(violation)) {}

SamplerContext SamplerContext::Start(const SpaceConfig& config) {
  SamplerContext ctx;
  ctx.true_rsize = config.input_size;
  ctx.last = AgentState::Start(config);
  return ctx;
}

SamplerContext ApplyLayer(const SamplerContext& ctx, const Layer& layer,
                          const SpaceConfig& config) {
  SamplerContext next;
  next.depth = ctx.depth + 1;
  next.true_rsize = ctx.true_rsize;
  AgentState& s = next.last;
  s.depth = next.depth;
  switch (layer.kind) {
    case LayerKind::kConv:
      s.kind = StateKind::kConv;
      s.units = layer.units;
      s.field = layer.field;
      s.stride = layer.stride;
      break;
    case LayerKind::kPool:
      s.kind = StateKind::kPool;
      s.field = layer.field;
      s.stride = layer.stride;
      next.true_rsize =
          PoolOutputSize(ctx.true_rsize, layer.field, layer.stride);
      break;
    case LayerKind::kFullyConnected:
      s.kind = StateKind::kFullyConnected;
      s.units = layer.units;
      next.consecutive_fc = ctx.consecutive_fc + 1;
      break;
    case LayerKind::kGlobalAvgPool:
    case LayerKind::kSoftmax:
      throw std::invalid_argument("ApplyLayer: " + layer.ToString() +
                                  " is a termination layer");
  }
  s.consecutive_fc = next.consecutive_fc;
  s.rsize_bin = BinOf(next.true_rsize, config);
  return next;
}

std::optional<SamplerContext> Transition(const SamplerContext& ctx,
                                         const Action& action,
                                         const SpaceConfig& config) {
  if (auto violation = CheckAction(ctx.last, action, config)) {
    throw ConstraintViolationError(std::move(*violation));
  }
  if (action.IsTermination()) return std::nullopt;
  return ApplyLayer(ctx, action.layer, config);
}

}  // namespace metaqnn
