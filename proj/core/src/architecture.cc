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

#include "metaqnn/architecture.h"

#include <cctype>
#include <limits>
#include <optional>

namespace metaqnn {
namespace {

class Cursor {
 public:
  Cursor(std::string_view text, std::size_t base = 0)
      : text_(text), base_(base) {}

  void SkipSpace() {
    while (pos_ < text_.size() &&
           std::isspace(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
  }
  bool AtEnd() const { return pos_ >= text_.size(); }
  char Peek() const { return AtEnd() ? '\0' : text_[pos_]; }
  std::size_t offset() const { return base_ + pos_; }

  [[noreturn]] void Fail(const std::string& what) const {
    throw ParseError(what, offset());
  }

  void Expect(char c) {
    if (Peek() != c) {
      Fail(std::string("expected '") + c + "'" +
           (AtEnd() ? " but input ended" : ", found '" + std::string(1, Peek()) + "'"));
    }
    ++pos_;
  }

  std::string_view Tag() {
    const std::size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isupper(static_cast<unsigned char>(text_[pos_]))) {
      ++pos_;
    }
    if (start == pos_) Fail("expected a layer tag");
    return text_.substr(start, pos_ - start);
  }

  int Integer() {
    if (!std::isdigit(static_cast<unsigned char>(Peek()))) {
      Fail("expected an integer");
    }
    long long value = 0;
    const std::size_t start = pos_;
    while (std::isdigit(static_cast<unsigned char>(Peek()))) {
      value = value * 10 + (text_[pos_] - '0');
      if (value > std::numeric_limits<int>::max()) {
        pos_ = start;
        Fail("integer out of range");
      }
      ++pos_;
    }
    return static_cast<int>(value);
  }

  Layer Term() {
    const std::size_t tag_offset = pos_;
    const std::string_view tag = Tag();
    std::size_t arity = 0;
    if (tag == "C") {
      arity = 3;
    } else if (tag == "P") {
      arity = 2;
    } else if (tag == "FC" || tag == "GAP" || tag == "SM") {
      arity = 1;
    } else {
      pos_ = tag_offset;
      Fail("unknown layer tag '" + std::string(tag) + "'");
    }
    SkipSpace();
    Expect('(');
    int args[3] = {0, 0, 0};
    for (std::size_t i = 0; i < arity; ++i) {
      if (i > 0) {
        SkipSpace();
        Expect(',');
      }
      SkipSpace();
      args[i] = Integer();
    }
    SkipSpace();
    Expect(')');

    Layer layer;
    if (tag == "C") {
      layer = {LayerKind::kConv, args[0], args[1], args[2]};
    } else if (tag == "P") {
      layer = Layer::Pool(args[0], args[1]);
    } else if (tag == "FC") {
      layer = Layer::FullyConnected(args[0]);
    } else if (tag == "GAP") {
      layer = Layer::GlobalAvgPool(args[0]);
    } else {
      layer = Layer::Softmax(args[0]);
    }
    return layer;
  }

 private:
  std::string_view text_;
  std::size_t base_;
  std::size_t pos_ = 0;
};

void Add(std::vector<Violation>& out, std::size_t index, std::string rule,
         std::string message) {
  out.push_back({index, std::move(rule), std::move(message)});
}

std::string JoinViolations(const std::vector<Violation>& violations) {
  std::string msg = "invalid architecture";
  for (const auto& v : violations) {
    msg += "; layer " + std::to_string(v.layer_index) + " (" + v.rule +
           "): " + v.message;
  }
  return msg;
}

// Index of the first layer of the termination suffix, or nullopt when the
// architecture does not end in "SM(K)" or "GAP(K), SM(K)".
std::optional<std::size_t> TerminationStart(const std::vector<Layer>& layers) {
  if (layers.empty() || layers.back().kind != LayerKind::kSoftmax) {
    return std::nullopt;
  }
  const std::size_t last = layers.size() - 1;
  if (last >= 1 && layers[last - 1].kind == LayerKind::kGlobalAvgPool) {
    return last - 1;
  }
  return last;
}

}  // namespace

std::string Serialize(const Architecture& arch) {
  std::string out = "[";
  for (std::size_t i = 0; i < arch.layers.size(); ++i) {
    if (i > 0) out += ", ";
    out += arch.layers[i].ToString();
  }
  out += ']';
  return out;
}

Architecture Parse(std::string_view text) {
  Cursor cur(text);
  Architecture arch;
  cur.SkipSpace();
  cur.Expect('[');
  cur.SkipSpace();
  if (cur.Peek() == ']') {
    cur.Expect(']');
  } else {
    while (true) {
      cur.SkipSpace();
      arch.layers.push_back(cur.Term());
      cur.SkipSpace();
      if (cur.Peek() == ',') {
        cur.Expect(',');
        continue;
      }
      cur.Expect(']');
      break;
    }
  }
  cur.SkipSpace();
  if (!cur.AtEnd()) cur.Fail("trailing characters after ']'");
  return arch;
}

Layer ParseLayer(std::string_view text) {
  Cursor cur(text);
  cur.SkipSpace();
  Layer layer = cur.Term();
  cur.SkipSpace();
  if (!cur.AtEnd()) cur.Fail("trailing characters after layer term");
  return layer;
}

std::vector<Violation> Validate(const Architecture& arch,
                                const SpaceConfig& config) {
  std::vector<Violation> out;
  const auto& layers = arch.layers;
  const auto term_start = TerminationStart(layers);
  if (!term_start) {
    Add(out, layers.empty() ? 0 : layers.size() - 1, "structure",
        "architecture must end with SM(K), optionally preceded by GAP(K)");
  }
  const std::size_t body_end = term_start.value_or(layers.size());

  SamplerContext ctx;
  try {
    ctx = SamplerContext::Start(config);
  } catch (const std::exception& e) {
    Add(out, 0, "structure", e.what());
    return out;
  }

  for (std::size_t i = 0; i < body_end; ++i) {
    const Layer& layer = layers[i];
    if (layer.IsTermination()) {
      Add(out, i, "structure",
          layer.ToString() + " may only appear at the end");
      continue;
    }
    if (auto v = CheckAction(ctx.last, Action::Add(layer), config)) {
      Add(out, i, RuleTag(v->rule), v->message);
    }
    try {
      ctx = ApplyLayer(ctx, layer, config);
    } catch (const std::exception& e) {
      Add(out, i, "f", e.what());
      return out;
    }
  }

  if (term_start) {
    const std::size_t t = *term_start;
    const Action action = layers[t].kind == LayerKind::kGlobalAvgPool
                              ? Action::TerminateGap(layers[t].units)
                              : Action::TerminateSoftmax(layers[t].units);
    if (auto v = CheckAction(ctx.last, action, config)) {
      Add(out, t, RuleTag(v->rule), v->message);
    }
    if (t + 1 < layers.size() && layers[t].units != layers.back().units) {
      Add(out, t, "structure", "GAP and SM class counts differ");
    }
  }
  return out;
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : std::invalid_argument(JoinViolations(violations)),
      violations_(std::move(violations)) {}

std::vector<Action> ActionsFromArchitecture(const Architecture& arch,
                                            const SpaceConfig& config) {
  auto violations = Validate(arch, config);
  if (!violations.empty()) throw ValidationError(std::move(violations));
  const std::size_t t = *TerminationStart(arch.layers);
  std::vector<Action> actions;
  actions.reserve(t + 1);
  for (std::size_t i = 0; i < t; ++i) {
    actions.push_back(Action::Add(arch.layers[i]));
  }
  actions.push_back(Action{arch.layers[t]});
  return actions;
}

Architecture ArchitectureFromActions(const std::vector<Action>& actions) {
  Architecture arch;
  arch.layers.reserve(actions.size() + 1);
  for (const auto& a : actions) {
    arch.layers.push_back(a.layer);
    if (a.layer.kind == LayerKind::kGlobalAvgPool) {
      arch.layers.push_back(Layer::Softmax(a.layer.units));
    }
  }
  return arch;
}

std::vector<std::int64_t> LayerParamCounts(const Architecture& arch,
                                           const SpaceConfig& config,
                                           ParamCounting counting) {
  auto violations = Validate(arch, config);
  if (!violations.empty()) throw ValidationError(std::move(violations));

  const bool dense = counting == ParamCounting::kAllTrainable;
  const bool bias = counting == ParamCounting::kAllTrainable;
  std::int64_t size = config.input_size;
  std::int64_t channels = config.input_channels;
  std::optional<std::int64_t> features;  // set once the map is flattened

  std::vector<std::int64_t> counts;
  counts.reserve(arch.layers.size());
  for (const Layer& l : arch.layers) {
    std::int64_t n = 0;
    switch (l.kind) {
      case LayerKind::kConv:
        n = std::int64_t{l.field} * l.field * channels * l.units +
            (bias ? l.units : 0);
        channels = l.units;
        break;
      case LayerKind::kPool:
        size = PoolOutputSize(static_cast<int>(size), l.field, l.stride);
        break;
      case LayerKind::kGlobalAvgPool:
        features = l.units;
        break;
      case LayerKind::kFullyConnected:
      case LayerKind::kSoftmax: {
        const std::int64_t in = features.value_or(size * size * channels);
        if (dense) n = in * l.units + l.units;
        features = l.units;
        break;
      }
    }
    counts.push_back(n);
  }
  return counts;
}

std::int64_t ParamCount(const Architecture& arch, const SpaceConfig& config,
                        ParamCounting counting) {
  std::int64_t total = 0;
  for (std::int64_t n : LayerParamCounts(arch, config, counting)) total += n;
  return total;
}

}  // namespace metaqnn
