// Copyright 2026 The spgru Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Uncertainty metrics over predicted variance maps and their tables.

#pragma once

#include <string>
#include <vector>

#include "spgru/checkpoint.hpp"
#include "spgru/data.hpp"

namespace spgru {

/// Summed pixel variance of every predicted frame.
struct UncertaintyMetric {
  std::vector<double> per_frame;     // mean over sequences, per frame index
  std::vector<double> per_sequence;  // mean over frames, per sequence
  double average = 0.0;              // mean over sequences and frames
};

/// predictions[i][t] is frame t of sequence i; all sequences equally long.
UncertaintyMetric uncertainty_metric(const std::vector<std::vector<MomentTensor>>& predictions);

/// Frames the model emits for one input sequence: the prediction head if it
/// has one, otherwise the reconstruction head.
std::vector<MomentTensor> predicted_frames(const Checkpoint& model, const std::vector<Matrix>& frames);

struct DeviationRow {
  std::string suite;
  double level = 0.0;
  UncertaintyMetric metric;
};

/// Rows for one suite ("angle", "speed" or "noise"): the reference set at
/// the training level, then the suite's three deviation sets.
std::vector<DeviationRow> evaluate_deviation(const Checkpoint& model, const std::vector<DeviationSet>& sets,
                                             const std::string& suite, int threads = 1);

bool strictly_increasing(const std::vector<DeviationRow>& rows);

/// suite, level, sequences, average, then one column per frame; a final
/// comment line carries the monotonicity verdict.
std::string format_deviation_table(const std::vector<DeviationRow>& rows);
/// suite, level, sequence index, per-sequence average.
std::string format_sequence_table(const std::vector<DeviationRow>& rows);

}  // namespace spgru
