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

#ifndef METAQNN_ANALYSIS_H_
#define METAQNN_ANALYSIS_H_

#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "metaqnn/qlearning.h"
#include "metaqnn/search.h"

namespace metaqnn {

struct IterationRecord {
  std::int64_t iteration = 0;
  double epsilon = 0.0;
  double accuracy = 0.0;
  bool cached = false;
};

// Successful events only; failed evaluations carry no accuracy.
std::vector<IterationRecord> RecordsFromEvents(
    std::span<const IterationEvent> events);

// out[i] = mean accuracy of records[max(0, i - window + 1) .. i].
std::vector<double> RollingMean(std::span<const IterationRecord> records,
                                int window);

struct EpsilonStats {
  double epsilon = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // population standard deviation
  std::int64_t count = 0;
};

// One row per distinct epsilon, highest epsilon first.
std::vector<EpsilonStats> PerEpsilonStats(
    std::span<const IterationRecord> records);

struct Histogram {
  double epsilon = 0.0;
  double bin_width = 0.0;
  std::vector<std::int64_t> counts;  // bin i covers [i*w, (i+1)*w)

  double lower(std::size_t i) const { return i * bin_width; }
  double upper(std::size_t i) const { return (i + 1) * bin_width; }
  std::int64_t total() const;
};

// Accuracies of the records at `epsilon`, binned over [0, 1]. Bins are
// lower-inclusive; an accuracy of exactly 1 lands in the last bin.
Histogram AccuracyHistogram(std::span<const IterationRecord> records,
                            double epsilon, double bin_width);

struct QSummaryRow {
  std::string group;  // layer type ("conv", "pool", "fc", "sm", "gap",
                      // "termination") or conv field ("1", "3", ...)
  int layer_depth = 0;  // depth of the layer the action adds
  double mean_q = 0.0;
  std::int64_t count = 0;
};

struct QSummary {
  std::vector<QSummaryRow> by_type;
  std::vector<QSummaryRow> by_conv_field;
};

// Mean of materialized Q entries grouped by the action they value. Entries
// that were never written are not counted.
QSummary SummarizeQ(const QTable& q);

// CSV writers; each emits a header row.
void WriteRollingCsv(std::ostream& out,
                     std::span<const IterationRecord> records, int window);
void WritePerEpsilonCsv(std::ostream& out,
                        std::span<const EpsilonStats> stats);
void WriteHistogramCsv(std::ostream& out, std::span<const Histogram> hists);
void WriteQSummaryCsv(std::ostream& out, std::span<const QSummaryRow> rows,
                      const std::string& group_column);

}  // namespace metaqnn

#endif  // METAQNN_ANALYSIS_H_
