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

#include <iostream>

#include "CLI11.hpp"
#include "spgru/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Sampling-free probabilistic GRU: training, evaluation and verification"};
  app.require_subcommand(1);

  spgru::CommandOptions opt;
  std::string config, out, checkpoint, suite;
  std::uint64_t seed = 0;
  int threads = 0;
  std::size_t samples = 0;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "Run configuration (INI)")->check(CLI::ExistingFile);
    sub->add_option("--seed", seed, "Override every seed in the configuration");
    sub->add_option("--out", out, "Output directory");
    sub->add_option("--threads", threads, "Worker threads (default: SPGRU_THREADS, then the config)")
        ->check(CLI::PositiveNumber);
  };

  auto* train = app.add_subcommand("train", "Train a model and write its checkpoint and metrics log");
  common(train);
  train->add_option("--resume", checkpoint, "Continue from this checkpoint")->check(CLI::ExistingFile);

  auto* eval = app.add_subcommand("eval-deviation", "Uncertainty on the angle/speed/noise deviation sets");
  common(eval);
  eval->add_option("--checkpoint", checkpoint, "Model to evaluate")->check(CLI::ExistingFile);
  eval->add_option("--suite", suite, "angle, speed, noise or all");

  auto* maps = app.add_subcommand("export-maps", "Write mean and variance maps of one predicted sequence");
  common(maps);
  maps->add_option("--checkpoint", checkpoint, "Model to run")->check(CLI::ExistingFile);

  auto* oracle = app.add_subcommand("oracle", "Check the closed-form moments against sampling oracles");
  common(oracle);
  oracle->add_option("--suite", suite, "Comma-separated: lmm,sigmoid,tanh,gamma,poisson,cell");
  oracle->add_option("--samples", samples, "Samples per check");

  auto* gen = app.add_subcommand("generate", "Write the reference and deviation datasets");
  common(gen);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : spgru::kExitConfig;
  }

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--config")) opt.config = config;
  if (sub->count("--seed")) opt.seed = seed;
  if (sub->count("--out")) opt.out = out;
  if (sub->count("--threads")) opt.threads = threads;
  if (!checkpoint.empty()) opt.checkpoint = checkpoint;
  if (!suite.empty()) opt.suite = suite;
  if (sub == oracle && oracle->count("--samples")) opt.samples = samples;

  if (sub == train) return spgru::cmd_train(opt, std::cout, std::cerr);
  if (sub == eval) return spgru::cmd_eval_deviation(opt, std::cout, std::cerr);
  if (sub == maps) return spgru::cmd_export_maps(opt, std::cout, std::cerr);
  if (sub == oracle) return spgru::cmd_oracle(opt, std::cout, std::cerr);
  return spgru::cmd_generate(opt, std::cout, std::cerr);
}
