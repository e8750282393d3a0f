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

#include "metaqnn/analysis.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>

namespace metaqnn {
namespace {

// Absorbs representation error so that e.g. 0.6 / 0.1 lands in bin 6.
constexpr double kBinSlack = 1e-9;

struct Accumulator {
  double sum = 0.0;
  std::int64_t count = 0;
  void Add(double v) {
    sum += v;
    ++count;
  }
};

const char* ActionGroup(const Action& a) {
  switch (a.layer.kind) {
    case LayerKind::kConv: return "conv";
    case LayerKind::kPool: return "pool";
    case LayerKind::kFullyConnected: return "fc";
    case LayerKind::kSoftmax: return "sm";
    case LayerKind::kGlobalAvgPool: return "gap";
  }
  return "?";
}

std::vector<QSummaryRow> Rows(
    const std::map<std::pair<int, std::string>, Accumulator>& acc) {
  std::vector<QSummaryRow> rows;
  rows.reserve(acc.size());
  for (const auto& [key, a] : acc) {
    rows.push_back({key.second, key.first, a.sum / a.count, a.count});
  }
  return rows;
}

}  // namespace

std::vector<IterationRecord> RecordsFromEvents(
    std::span<const IterationEvent> events) {
  std::vector<IterationRecord> out;
  out.reserve(events.size());
  for (const auto& e : events) {
    if (e.status != EvalStatus::kOk || !e.accuracy) continue;
    out.push_back({e.iteration, e.epsilon, *e.accuracy, e.cached});
  }
  return out;
}

std::vector<double> RollingMean(std::span<const IterationRecord> records,
                                int window) {
  if (window < 1) throw std::invalid_argument("window must be >= 1");
  std::vector<double> out;
  out.reserve(records.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < records.size(); ++i) {
    sum += records[i].accuracy;
    const std::size_t w = static_cast<std::size_t>(window);
    if (i >= w) sum -= records[i - w].accuracy;
    out.push_back(sum / static_cast<double>(std::min(i + 1, w)));
  }
  return out;
}

std::vector<EpsilonStats> PerEpsilonStats(
    std::span<const IterationRecord> records) {
  std::map<double, std::vector<double>, std::greater<>> groups;
  for (const auto& r : records) groups[r.epsilon].push_back(r.accuracy);
  std::vector<EpsilonStats> out;
  out.reserve(groups.size());
  for (const auto& [eps, values] : groups) {
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(values.size());
    out.push_back({eps, mean, std::sqrt(var),
                   static_cast<std::int64_t>(values.size())});
  }
  return out;
}

std::int64_t Histogram::total() const {
  std::int64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

Histogram AccuracyHistogram(std::span<const IterationRecord> records,
                            double epsilon, double bin_width) {
  if (!(bin_width > 0.0 && bin_width <= 1.0)) {
    throw std::invalid_argument("bin_width must lie in (0, 1]");
  }
  Histogram h;
  h.epsilon = epsilon;
  h.bin_width = bin_width;
  const auto bins =
      static_cast<std::size_t>(std::ceil(1.0 / bin_width - kBinSlack));
  h.counts.assign(bins, 0);
  for (const auto& r : records) {
    if (std::abs(r.epsilon - epsilon) > 1e-12) continue;
    auto idx = static_cast<std::int64_t>(
        std::floor(r.accuracy / bin_width + kBinSlack));
    idx = std::clamp<std::int64_t>(idx, 0, static_cast<std::int64_t>(bins) - 1);
    ++h.counts[static_cast<std::size_t>(idx)];
  }
  return h;
}

QSummary SummarizeQ(const QTable& q) {
  std::map<std::pair<int, std::string>, Accumulator> by_type;
  std::map<std::pair<int, std::string>, Accumulator> by_field;
  for (const auto& e : q.Entries()) {
    const int depth = e.state.depth + 1;
    by_type[{depth, ActionGroup(e.action)}].Add(e.value);
    if (e.action.IsTermination()) by_type[{depth, "termination"}].Add(e.value);
    if (e.action.layer.kind == LayerKind::kConv) {
      by_field[{depth, std::to_string(e.action.layer.field)}].Add(e.value);
    }
  }
  return {Rows(by_type), Rows(by_field)};
}

void WriteRollingCsv(std::ostream& out,
                     std::span<const IterationRecord> records, int window) {
  const auto mean = RollingMean(records, window);
  out << "iteration,epsilon,accuracy,cached,rolling_mean\n";
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    out << r.iteration << ',' << r.epsilon << ',' << r.accuracy << ','
        << (r.cached ? 1 : 0) << ',' << mean[i] << '\n';
  }
}

void WritePerEpsilonCsv(std::ostream& out,
                        std::span<const EpsilonStats> stats) {
  out << "epsilon,mean_accuracy,std_accuracy,count\n";
  for (const auto& s : stats) {
    out << s.epsilon << ',' << s.mean << ',' << s.stddev << ',' << s.count
        << '\n';
  }
}

void WriteHistogramCsv(std::ostream& out, std::span<const Histogram> hists) {
  out << "epsilon,bin_lower,bin_upper,count\n";
  for (const auto& h : hists) {
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      out << h.epsilon << ',' << h.lower(i) << ',' << h.upper(i) << ','
          << h.counts[i] << '\n';
    }
  }
}

void WriteQSummaryCsv(std::ostream& out, std::span<const QSummaryRow> rows,
                      const std::string& group_column) {
  out << "layer_depth," << group_column << ",mean_q,count\n";
  for (const auto& r : rows) {
    out << r.layer_depth << ',' << r.group << ',' << r.mean_q << ','
        << r.count << '\n';
  }
}

}  // namespace metaqnn
