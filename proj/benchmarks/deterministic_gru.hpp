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

// Deterministic GRU with the predictor topology of spgru::NetworkParams,
// evaluated on the weight means. Shared by the benchmark and the tests.

#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "spgru/network.hpp"

namespace spgru::bench {

class DeterministicGru {
 public:
  DeterministicGru(const NetworkParams& p, const NetworkConfig& cfg) : cfg_(cfg) {
    load(enc_, p.encoder);
    load(dec_, p.predict.value().cell);
    v_ = p.predict->output.v_mean;
    c_ = p.predict->output.c_mean;
  }

  /// Predicted frames for the first cfg.input_len frames.
  std::vector<Eigen::VectorXd> forward(std::span<const Matrix> frames) const {
    Eigen::VectorXd h = Eigen::VectorXd::Zero(cfg_.hidden);
    for (int t = 0; t < cfg_.input_len; ++t) h = step(enc_, &frames[static_cast<std::size_t>(t)], h);
    std::vector<Eigen::VectorXd> out;
    out.reserve(static_cast<std::size_t>(cfg_.output_len));
    for (int t = 0; t < cfg_.output_len; ++t) {
      h = step(dec_, nullptr, h);
      out.push_back(sigmoid(v_ * h + c_));
    }
    return out;
  }

 private:
  struct Cell {
    Matrix u[3], w[3];
    Eigen::VectorXd b[3];
  };

  static void load(Cell& c, const CellParams& p) {
    const GateParams* g[3] = {&p.reset, &p.update, &p.candidate};
    for (int k = 0; k < 3; ++k) {
      c.u[k] = g[k]->u_mean;
      c.w[k] = g[k]->w_mean;
      c.b[k] = g[k]->b_mean;
    }
  }

  static Eigen::VectorXd sigmoid(const Eigen::VectorXd& a) {
    return a.unaryExpr([](double x) { return logistic(x); });
  }

  static Eigen::VectorXd step(const Cell& c, const Matrix* x, const Eigen::VectorXd& h) {
    Eigen::VectorXd ar = c.w[0] * h + c.b[0];
    Eigen::VectorXd az = c.w[1] * h + c.b[1];
    if (x) {
      ar += c.u[0] * *x;
      az += c.u[1] * *x;
    }
    const Eigen::VectorXd r = sigmoid(ar);
    const Eigen::VectorXd z = sigmoid(az);
    Eigen::VectorXd ac = c.w[2] * r.cwiseProduct(h) + c.b[2];
    if (x) ac += c.u[2] * *x;
    const Eigen::VectorXd cand = ac.array().tanh().matrix();
    return (1.0 - z.array()).matrix().cwiseProduct(cand) + z.cwiseProduct(h);
  }

  NetworkConfig cfg_;
  Cell enc_, dec_;
  Matrix v_;
  Eigen::VectorXd c_;
};

}  // namespace spgru::bench
