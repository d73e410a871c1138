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

#include "spgru/metrics.hpp"

#include <cstdio>

#include "parallel.hpp"
#include "spgru/error.hpp"

namespace spgru {

UncertaintyMetric uncertainty_metric(const std::vector<std::vector<MomentTensor>>& predictions) {
  if (predictions.empty()) throw ShapeError("uncertainty metric of an empty set");
  const std::size_t frames = predictions.front().size();
  if (frames == 0) throw ShapeError("uncertainty metric of empty sequences");
  UncertaintyMetric u;
  u.per_frame.assign(frames, 0.0);
  for (const auto& seq : predictions) {
    if (seq.size() != frames) throw ShapeError("sequences differ in length");
    double seq_sum = 0.0;
    for (std::size_t t = 0; t < frames; ++t) {
      const double v = seq[t].s.sum();
      u.per_frame[t] += v;
      seq_sum += v;
    }
    u.per_sequence.push_back(seq_sum / static_cast<double>(frames));
  }
  for (double& v : u.per_frame) v /= static_cast<double>(predictions.size());
  double total = 0.0;
  for (double v : u.per_sequence) total += v;
  u.average = total / static_cast<double>(predictions.size());
  return u;
}

std::vector<MomentTensor> predicted_frames(const Checkpoint& model, const std::vector<Matrix>& frames) {
  UnrollResult r = unroll(frames, model.config, model.params);
  return model.config.has_prediction() ? std::move(r.prediction) : std::move(r.reconstruction);
}

std::vector<DeviationRow> evaluate_deviation(const Checkpoint& model, const std::vector<DeviationSet>& sets,
                                             const std::string& suite, int threads) {
  if (suite != "angle" && suite != "speed" && suite != "noise") throw ConfigError("unknown suite '" + suite + "'");
  std::vector<DeviationRow> rows;
  for (const auto& set : sets) {
    if (set.suite != "reference" && set.suite != suite) continue;
    if (static_cast<Eigen::Index>(set.batch.frame_h) * set.batch.frame_w != model.config.input) {
      throw ConfigError("test frames do not match the checkpoint's input size");
    }
    std::vector<std::vector<MomentTensor>> preds(set.batch.size());
    detail::parallel_for(set.batch.size(), threads,
                         [&](std::size_t i) { preds[i] = predicted_frames(model, set.batch.frames[i]); });
    DeviationRow row;
    row.suite = suite;
    if (set.suite == "reference") {
      row.level = suite == "angle" ? set.cfg.angle_deg : suite == "speed" ? set.cfg.speed : set.cfg.noise_b;
    } else {
      row.level = set.level;
    }
    row.metric = uncertainty_metric(preds);
    rows.push_back(std::move(row));
  }
  return rows;
}

bool strictly_increasing(const std::vector<DeviationRow>& rows) {
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (!(rows[i].metric.average > rows[i - 1].metric.average)) return false;
  }
  return true;
}

std::string format_deviation_table(const std::vector<DeviationRow>& rows) {
  std::string out = "suite\tlevel\tsequences\taverage_summed_variance";
  const std::size_t frames = rows.empty() ? 0 : rows.front().metric.per_frame.size();
  for (std::size_t t = 0; t < frames; ++t) out += "\tframe_" + std::to_string(t + 1);
  out += '\n';
  char buf[64];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g", r.level);
    out += r.suite + '\t' + buf + '\t' + std::to_string(r.metric.per_sequence.size());
    std::snprintf(buf, sizeof buf, "\t%.17g", r.metric.average);
    out += buf;
    for (double v : r.metric.per_frame) {
      std::snprintf(buf, sizeof buf, "\t%.17g", v);
      out += buf;
    }
    out += '\n';
  }
  out += std::string("# strictly_increasing=") + (strictly_increasing(rows) ? "yes" : "no") + '\n';
  return out;
}

std::string format_sequence_table(const std::vector<DeviationRow>& rows) {
  std::string out = "suite\tlevel\tsequence\taverage_summed_variance\n";
  char buf[96];
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.metric.per_sequence.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g\t%zu\t%.17g", r.level, i, r.metric.per_sequence[i]);
      out += r.suite + '\t' + buf + '\n';
    }
  }
  return out;
}

}  // namespace spgru
