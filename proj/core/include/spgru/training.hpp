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

// Losses, the ADAM optimizer and the training loop.

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "spgru/autodiff.hpp"
#include "spgru/checkpoint.hpp"
#include "spgru/data.hpp"
#include "spgru/network.hpp"

namespace spgru {

// Both losses sum over pixels and average over frames, so one value is the
// loss "per image per frame". Only BCE ignores the variance channel.
double loss_bce_mean(const std::vector<MomentTensor>& pred, const std::vector<Matrix>& targets);
double loss_gaussian_nll(const std::vector<MomentTensor>& pred, const std::vector<Matrix>& targets);

ad::Var loss_on_tape(ad::Tape& tape, const std::vector<Moments<ad::Var>>& pred,
                     const std::vector<Matrix>& targets, LossKind kind);

struct OptimState {
  std::vector<Matrix> m;  // first-moment accumulators, shaped like the parameters
  std::vector<Matrix> v;  // second-moment accumulators
  std::uint64_t step = 0;
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  /// Zero accumulators shaped like `params`.
  static OptimState like(const std::vector<Matrix*>& params, double lr = 0.05, double beta1 = 0.9,
                         double beta2 = 0.999, double eps = 1e-8);
  void validate() const;
};

/// Bias-corrected ADAM update, applied in place. Throws ShapeError.
void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, OptimState& st);

/// Parameter matrices in NetworkParams::visit order.
std::vector<Matrix*> parameter_list(NetworkParams& p);
std::vector<std::string> parameter_names(const NetworkParams& p);

struct TrainConfig {
  int epochs = 2000;
  int steps_per_epoch = 1;
  int batch_size = 30;
  std::uint64_t seed = 0;
  double lr = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::optional<double> clip_norm;
  double init_variance = 1e-3;
  /// Write a checkpoint every this many epochs; 0 disables.
  int checkpoint_every = 0;
  int threads = 1;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  std::uint64_t step = 0;
  double loss = 0.0;  // mean over the epoch's steps, before each update
  std::size_t clamped = 0;
  double grad_norm = 0.0;  // of the epoch's last step, before clipping
  double wall_seconds = 0.0;
};

/// Deterministic log line (no wall time).
std::string format_epoch(const EpochRecord& r);

struct BatchGradient {
  double loss = 0.0;  // mean over sequences
  std::vector<Matrix> grads;  // parameter_list order, mean over sequences
  std::size_t clamped = 0;
};

/// Loss and gradient of a batch; sequences run on up to `threads` workers
/// and are reduced in index order.
BatchGradient batch_gradient(const NetworkConfig& cfg, const NetworkParams& params, const SequenceBatch& batch,
                             int threads = 1);

/// Forward-only loss of one sequence.
double sequence_loss(const NetworkConfig& cfg, const NetworkParams& params, const std::vector<Matrix>& frames);

struct TrainOptions {
  /// If set, metrics.log, timing.log and checkpoints are written here.
  std::optional<std::filesystem::path> out_dir;
  std::optional<Checkpoint> resume;
  /// Stop after this epoch (inclusive) even if cfg.epochs is larger.
  std::optional<int> stop_after;
  std::function<void(const EpochRecord&)> on_epoch;
  /// Training sequences; when absent they are generated from the trajectory
  /// config with a per-step seed.
  const SpriteSet* sprites = nullptr;
};

struct TrainResult {
  NetworkParams params;
  OptimState optim;
  std::vector<EpochRecord> log;
  int epochs_done = 0;
};

Checkpoint make_checkpoint(const NetworkConfig& cfg, const NetworkParams& params, const OptimState& optim,
                           int epoch);
/// Restores ADAM state stored by make_checkpoint.
OptimState optim_from_checkpoint(const Checkpoint& c, const TrainConfig& tc, int* epoch = nullptr);

TrainResult train(const NetworkConfig& cfg, const TrajectoryConfig& data, const TrainConfig& tc,
                  const TrainOptions& options = {});

}  // namespace spgru
