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

#include "spgru/training.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "parallel.hpp"
#include "random_util.hpp"
#include "spgru/error.hpp"

namespace spgru {

namespace {

void check_targets(std::size_t n_pred, const std::vector<Matrix>& targets) {
  if (n_pred != targets.size()) {
    throw ShapeError("loss: " + std::to_string(n_pred) + " predictions for " + std::to_string(targets.size()) +
                     " targets");
  }
  if (targets.empty()) throw ShapeError("loss: empty sequence");
}

double bce(double p, double t) {
  p = std::clamp(p, ad::kBceEpsilon, 1.0 - ad::kBceEpsilon);
  return -(t * std::log(p) + (1.0 - t) * std::log1p(-p));
}

}  // namespace

double loss_bce_mean(const std::vector<MomentTensor>& pred, const std::vector<Matrix>& targets) {
  check_targets(pred.size(), targets);
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].m.size() != targets[t].size()) throw ShapeError("loss: frame size mismatch");
    for (Eigen::Index i = 0; i < targets[t].size(); ++i) total += bce(pred[t].m(i), targets[t](i));
  }
  return total / static_cast<double>(pred.size());
}

double loss_gaussian_nll(const std::vector<MomentTensor>& pred, const std::vector<Matrix>& targets) {
  check_targets(pred.size(), targets);
  double total = 0.0;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    if (pred[t].m.size() != targets[t].size()) throw ShapeError("loss: frame size mismatch");
    for (Eigen::Index i = 0; i < targets[t].size(); ++i) {
      const double s = std::max(pred[t].s(i), ad::kNllVarianceFloor);
      const double d = targets[t](i) - pred[t].m(i);
      total += 0.5 * (std::log(2.0 * std::numbers::pi * s) + d * d / s);
    }
  }
  return total / static_cast<double>(pred.size());
}

ad::Var loss_on_tape(ad::Tape& tape, const std::vector<Moments<ad::Var>>& pred, const std::vector<Matrix>& targets,
                     LossKind kind) {
  check_targets(pred.size(), targets);
  std::optional<ad::Var> total;
  for (std::size_t t = 0; t < pred.size(); ++t) {
    const ad::Var target = tape.constant(targets[t]);
    const ad::Var term = kind == LossKind::BceMean ? tape.record(ad::Op::BceSum, {pred[t].m, target})
                                                   : tape.record(ad::Op::GaussNllSum, {pred[t].m, pred[t].s, target});
    total = total ? *total + term : term;
  }
  return *total * (1.0 / static_cast<double>(pred.size()));
}

// ---------------------------------------------------------------------------
// ADAM

OptimState OptimState::like(const std::vector<Matrix*>& params, double lr, double beta1, double beta2, double eps) {
  OptimState st;
  st.lr = lr;
  st.beta1 = beta1;
  st.beta2 = beta2;
  st.eps = eps;
  for (const Matrix* p : params) {
    st.m.push_back(Matrix::Zero(p->rows(), p->cols()));
    st.v.push_back(Matrix::Zero(p->rows(), p->cols()));
  }
  st.validate();
  return st;
}

void OptimState::validate() const {
  if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (m.size() != v.size()) throw ShapeError("optimizer accumulators differ in count");
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (m[i].rows() != v[i].rows() || m[i].cols() != v[i].cols()) throw ShapeError("optimizer accumulator shapes differ");
  }
}

void adam_step(const std::vector<Matrix*>& params, const std::vector<Matrix>& grads, OptimState& st) {
  if (params.size() != grads.size() || params.size() != st.m.size() || params.size() != st.v.size()) {
    throw ShapeError("adam_step: parameter, gradient and state counts differ");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Matrix& p = *params[i];
    for (const Matrix* other : std::initializer_list<const Matrix*>{&grads[i], &st.m[i], &st.v[i]}) {
      if (other->rows() != p.rows() || other->cols() != p.cols()) {
        throw ShapeError("adam_step: shape mismatch at parameter " + std::to_string(i));
      }
    }
  }
  ++st.step;
  const double t = static_cast<double>(st.step);
  const double c1 = 1.0 - std::pow(st.beta1, t);
  const double c2 = 1.0 - std::pow(st.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    Matrix& p = *params[i];
    Matrix& m = st.m[i];
    Matrix& v = st.v[i];
    const Matrix& g = grads[i];
    for (Eigen::Index k = 0; k < p.size(); ++k) {
      m(k) = st.beta1 * m(k) + (1.0 - st.beta1) * g(k);
      v(k) = st.beta2 * v(k) + (1.0 - st.beta2) * g(k) * g(k);
      const double mhat = m(k) / c1;
      const double vhat = v(k) / c2;
      p(k) -= st.lr * mhat / (std::sqrt(vhat) + st.eps);
    }
  }
}

std::vector<Matrix*> parameter_list(NetworkParams& p) {
  std::vector<Matrix*> out;
  p.visit([&](const std::string&, Matrix& m) { out.push_back(&m); });
  return out;
}

std::vector<std::string> parameter_names(const NetworkParams& p) {
  std::vector<std::string> out;
  p.visit([&](const std::string& name, const Matrix&) { out.push_back(name); });
  return out;
}

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("epochs must be >= 0");
  if (steps_per_epoch < 1) throw ConfigError("steps_per_epoch must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  if (!(lr >= 0.0)) throw ConfigError("lr must be >= 0");
  if (!(beta1 > 0.0 && beta1 < 1.0)) throw ConfigError("beta1 must lie in (0, 1)");
  if (!(beta2 > 0.0 && beta2 < 1.0)) throw ConfigError("beta2 must lie in (0, 1)");
  if (!(eps > 0.0)) throw ConfigError("eps must be > 0");
  if (clip_norm && !(*clip_norm > 0.0)) throw ConfigError("clip_norm must be > 0");
  if (!(init_variance > 0.0)) throw ConfigError("init_variance must be > 0");
  if (checkpoint_every < 0) throw ConfigError("checkpoint_every must be >= 0");
  if (threads < 1) throw ConfigError("threads must be >= 1");
}

std::string format_epoch(const EpochRecord& r) {
  char buf[192];
  std::snprintf(buf, sizeof buf, "epoch=%d step=%llu loss=%.17g clamped=%zu grad_norm=%.17g", r.epoch,
                static_cast<unsigned long long>(r.step), r.loss, r.clamped, r.grad_norm);
  return buf;
}

// ---------------------------------------------------------------------------
// Gradients

namespace {

struct SequenceGradient {
  double loss = 0.0;
  std::vector<Matrix> grads;
  std::size_t clamped = 0;
};

SequenceGradient sequence_gradient(const NetworkConfig& cfg, const NetworkParams& params,
                                   const std::vector<Matrix>& frames) {
  ad::Tape tape(ad::TapeOptions{false, cfg.constants()});
  TapeOps ops(tape);
  const auto net = prepare_network(ops, params);
  const auto out = unroll(ops, net, cfg, frames);
  std::optional<ad::Var> loss;
  if (cfg.has_reconstruction()) loss = loss_on_tape(tape, out.reconstruction, reconstruction_targets(frames, cfg), cfg.loss);
  if (cfg.has_prediction()) {
    const ad::Var l = loss_on_tape(tape, out.prediction, prediction_targets(frames, cfg), cfg.loss);
    loss = loss ? *loss + l : l;
  }
  const ad::Gradients g = tape.backward(*loss);
  SequenceGradient r;
  r.loss = loss->value()(0, 0);
  r.clamped = tape.clamp_count();
  // Arrays the model never reads (input weights of input-free cells) get zeros.
  params.visit([&](const std::string&, const Matrix& m) {
    const auto it = ops.bindings.find(&m);
    r.grads.push_back(it == ops.bindings.end() ? Matrix::Zero(m.rows(), m.cols()) : g.of(it->second));
  });
  return r;
}

}  // namespace

double sequence_loss(const NetworkConfig& cfg, const NetworkParams& params, const std::vector<Matrix>& frames) {
  const UnrollResult u = unroll(frames, cfg, params);
  auto loss = [&](const std::vector<MomentTensor>& pred, const std::vector<Matrix>& targets) {
    return cfg.loss == LossKind::BceMean ? loss_bce_mean(pred, targets) : loss_gaussian_nll(pred, targets);
  };
  double total = 0.0;
  if (cfg.has_reconstruction()) total += loss(u.reconstruction, reconstruction_targets(frames, cfg));
  if (cfg.has_prediction()) total += loss(u.prediction, prediction_targets(frames, cfg));
  return total;
}

BatchGradient batch_gradient(const NetworkConfig& cfg, const NetworkParams& params, const SequenceBatch& batch,
                             int threads) {
  if (batch.size() == 0) throw ShapeError("empty batch");
  std::vector<SequenceGradient> per(batch.size());
  detail::parallel_for(batch.size(), threads,
                       [&](std::size_t i) { per[i] = sequence_gradient(cfg, params, batch.frames[i]); });
  BatchGradient out;
  out.grads = std::move(per[0].grads);
  out.loss = per[0].loss;
  out.clamped = per[0].clamped;
  for (std::size_t i = 1; i < per.size(); ++i) {
    out.loss += per[i].loss;
    out.clamped += per[i].clamped;
    for (std::size_t k = 0; k < out.grads.size(); ++k) out.grads[k] += per[i].grads[k];
  }
  const double inv = 1.0 / static_cast<double>(per.size());
  out.loss *= inv;
  for (auto& g : out.grads) g *= inv;
  return out;
}

// ---------------------------------------------------------------------------
// Checkpoints

Checkpoint make_checkpoint(const NetworkConfig& cfg, const NetworkParams& params, const OptimState& optim,
                           int epoch) {
  Checkpoint c;
  c.config = cfg;
  c.params = params;
  c.meta = "epoch=" + std::to_string(epoch) + "\nstep=" + std::to_string(optim.step) + "\n";
  const auto names = parameter_names(params);
  if (!optim.m.empty()) {
    if (optim.m.size() != names.size()) throw ShapeError("optimizer state does not match parameters");
    for (std::size_t i = 0; i < names.size(); ++i) c.extra.push_back({"adam.m/" + names[i], optim.m[i]});
    for (std::size_t i = 0; i < names.size(); ++i) c.extra.push_back({"adam.v/" + names[i], optim.v[i]});
  }
  c.extra.push_back({"adam.step", Matrix::Constant(1, 1, static_cast<double>(optim.step))});
  return c;
}

OptimState optim_from_checkpoint(const Checkpoint& c, const TrainConfig& tc, int* epoch) {
  NetworkParams params = c.params;
  const auto names = parameter_names(params);
  OptimState st = OptimState::like(parameter_list(params), tc.lr, tc.beta1, tc.beta2, tc.eps);
  const Matrix* step = c.find_extra("adam.step");
  if (!step || step->size() != 1) throw ShapeError("checkpoint has no optimizer state");
  st.step = static_cast<std::uint64_t>((*step)(0));
  for (std::size_t i = 0; i < names.size(); ++i) {
    const Matrix* m = c.find_extra("adam.m/" + names[i]);
    const Matrix* v = c.find_extra("adam.v/" + names[i]);
    if (!m || !v) throw ShapeError("checkpoint is missing optimizer state for '" + names[i] + "'");
    if (m->rows() != st.m[i].rows() || m->cols() != st.m[i].cols() || v->rows() != st.v[i].rows() ||
        v->cols() != st.v[i].cols()) {
      throw ShapeError("optimizer state shape mismatch for '" + names[i] + "'");
    }
    st.m[i] = *m;
    st.v[i] = *v;
  }
  if (epoch) {
    *epoch = 0;
    const auto pos = c.meta.find("epoch=");
    if (pos != std::string::npos) *epoch = std::stoi(c.meta.substr(pos + 6));
  }
  return st;
}

// ---------------------------------------------------------------------------
// Loop

namespace {

std::ofstream open_log(const std::filesystem::path& path, bool append) {
  std::ofstream out(path, append ? std::ios::app : std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  return out;
}

std::string checkpoint_name(int epoch) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "checkpoint-%06d.spgru", epoch);
  return buf;
}

}  // namespace

TrainResult train(const NetworkConfig& cfg, const TrajectoryConfig& data, const TrainConfig& tc,
                  const TrainOptions& options) {
  cfg.validate();
  data.validate();
  tc.validate();
  if (static_cast<Eigen::Index>(data.frame_size) * data.frame_size != cfg.input) {
    throw ConfigError("frame size " + std::to_string(data.frame_size) + " does not match model input " +
                      std::to_string(cfg.input));
  }
  const int needed = cfg.input_len + (cfg.has_prediction() ? cfg.output_len : 0);
  if (data.seq_len < needed) {
    throw ConfigError("seq_len " + std::to_string(data.seq_len) + " is shorter than the " + std::to_string(needed) +
                      " frames the model needs");
  }

  TrainResult r;
  int start_epoch = 0;
  if (options.resume) {
    if (options.resume->config.hash() != cfg.hash()) throw ConfigError("checkpoint was trained with a different model config");
    r.params = options.resume->params;
    r.optim = optim_from_checkpoint(*options.resume, tc, &start_epoch);
  } else {
    r.params = init_params(cfg, tc.seed, tc.init_variance);
    r.optim = OptimState::like(parameter_list(r.params), tc.lr, tc.beta1, tc.beta2, tc.eps);
  }
  std::vector<Matrix*> plist = parameter_list(r.params);

  std::ofstream metrics, timing;
  if (options.out_dir) {
    std::error_code ec;
    std::filesystem::create_directories(*options.out_dir, ec);
    if (ec) throw IoError("cannot create '" + options.out_dir->string() + "'");
    metrics = open_log(*options.out_dir / "metrics.log", options.resume.has_value());
    timing = open_log(*options.out_dir / "timing.log", options.resume.has_value());
  }

  const int last = options.stop_after ? std::min(tc.epochs, *options.stop_after) : tc.epochs;
  r.epochs_done = start_epoch;
  for (int epoch = start_epoch + 1; epoch <= last; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    double loss_sum = 0.0;
    for (int k = 0; k < tc.steps_per_epoch; ++k) {
      TrajectoryConfig step_data = data;
      step_data.seed = detail::mix_seed(data.seed, r.optim.step + 1);
      const SequenceBatch batch = generate(step_data, static_cast<std::size_t>(tc.batch_size), options.sprites);
      BatchGradient bg = batch_gradient(cfg, r.params, batch, tc.threads);
      if (!std::isfinite(bg.loss)) {
        throw NonFiniteError("non-finite loss at step " + std::to_string(r.optim.step + 1));
      }
      double sq = 0.0;
      for (const auto& g : bg.grads) sq += g.squaredNorm();
      const double norm = std::sqrt(sq);
      if (!std::isfinite(norm)) throw NonFiniteError("non-finite gradient at step " + std::to_string(r.optim.step + 1));
      if (tc.clip_norm && norm > *tc.clip_norm) {
        const double scale = *tc.clip_norm / norm;
        for (auto& g : bg.grads) g *= scale;
      }
      adam_step(plist, bg.grads, r.optim);
      loss_sum += bg.loss;
      rec.clamped += bg.clamped;
      rec.grad_norm = norm;
    }
    rec.step = r.optim.step;
    rec.loss = loss_sum / tc.steps_per_epoch;
    rec.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    r.log.push_back(rec);
    r.epochs_done = epoch;
    if (options.out_dir) {
      metrics << format_epoch(rec) << '\n';
      timing << "epoch=" << epoch << " wall_seconds=" << rec.wall_seconds << '\n';
      if (!metrics || !timing) throw IoError("cannot write training logs");
      if (tc.checkpoint_every > 0 && epoch % tc.checkpoint_every == 0) {
        save_checkpoint(*options.out_dir / checkpoint_name(epoch), make_checkpoint(cfg, r.params, r.optim, epoch));
      }
    }
    if (options.on_epoch) options.on_epoch(rec);
  }
  if (options.out_dir) {
    metrics.flush();
    timing.flush();
    save_checkpoint(*options.out_dir / "model.spgru", make_checkpoint(cfg, r.params, r.optim, r.epochs_done));
  }
  return r;
}

}  // namespace spgru
