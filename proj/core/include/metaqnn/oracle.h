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

#ifndef METAQNN_ORACLE_H_
#define METAQNN_ORACLE_H_

#include <cstdint>
#include <stdexcept>
#include <string>

#include "metaqnn/architecture.h"

namespace metaqnn {

// Evaluation of one architecture failed. Retriable errors (timeouts) may
// succeed on a second attempt; the others will not.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, bool retriable)
      : std::runtime_error(what), retriable_(retriable) {}
  bool retriable() const { return retriable_; }

 private:
  bool retriable_;
};

// The oracle cannot be reached at all (worker did not start, connection
// refused, handshake failed).
class OracleUnavailableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Maps an architecture to a validation accuracy in [0, 1].
class RewardOracle {
 public:
  virtual ~RewardOracle() = default;
  // Must be safe to call from several threads when the search runs more
  // than one worker. Throws EvaluationError.
  virtual double Evaluate(const Architecture& arch) = 0;
};

struct SurrogateWeights {
  double base = 0.3;
  double per_conv = 0.05;
  int conv_cap = 6;
  double per_pool = 0.04;
  int pool_cap = 3;
  double extra_fc_penalty = 0.07;
  double noise = 0.02;
};

// Deterministic stand-in for training: rewards conv and pool layers with
// diminishing returns, penalizes FC layers beyond the first, adds bounded
// noise hashed from (seed, canonical string).
class SurrogateOracle : public RewardOracle {
 public:
  explicit SurrogateOracle(std::uint64_t seed, SurrogateWeights weights = {});

  double Evaluate(const Architecture& arch) override;

  // Score with an explicit noise term instead of the hashed one.
  double Score(const Architecture& arch, double noise) const;
  // Noise in [-weights.noise, +weights.noise] for a canonical string.
  double Noise(const std::string& canonical) const;

  const SurrogateWeights& weights() const { return weights_; }

 private:
  std::uint64_t seed_;
  SurrogateWeights weights_;
};

}  // namespace metaqnn

#endif  // METAQNN_ORACLE_H_
