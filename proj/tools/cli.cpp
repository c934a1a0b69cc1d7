// Copyright 2026 The TGB Authors. All Rights Reserved.
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

#include "cli.hpp"

#include <ostream>

#include "CLI11.hpp"
#include "commands.hpp"
#include "tgb/bootstrap.hpp"
#include "tgb/error.hpp"

namespace tgb::cli {

namespace {

void add_config_options(CLI::App* cmd, ConfigOptions& o) {
  cmd->add_option("--config", o.config_path, "JSON run config");
  cmd->add_option("--set", o.sets, "Override a config key: section.key=value (repeatable)");
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Temporal grounding bridge: data, training, evaluation and tooling", "tgb"};
  app.require_subcommand(1);

  SynthOptions synth;
  auto* c_synth = app.add_subcommand("synth", "Generate a synthetic grounding dataset");
  add_config_options(c_synth, synth.cfg);
  c_synth->add_option("--out", synth.out, "Output directory")->required();
  c_synth->add_option("--num-examples", synth.num_examples, "synth.num_examples");
  c_synth->add_option("--frames", synth.frames, "Fixed sequence length (synth.min/max_frames)");
  c_synth->add_option("--noise", synth.noise, "synth.noise_sigma");
  c_synth->add_option("--seed", synth.seed, "synth.seed");

  TrainOptions train;
  auto* c_train = app.add_subcommand("train", "Train the bridge; checkpoints every epoch");
  add_config_options(c_train, train.cfg);
  c_train->add_option("--data", train.data, "Dataset directory or manifest");
  c_train->add_option("--out", train.out, "Checkpoint directory")->required();
  c_train->add_option("--resume", train.resume, "Continue from this checkpoint");
  c_train->add_option("--labels", train.labels, "Pseudo-label JSONL replacing gold spans");
  c_train->add_option("--split", train.split, "Split to train on, or 'all'");
  c_train->add_option("--epochs", train.epochs, "train.epochs");
  c_train->add_option("--stop-after", train.stop_after, "Epochs to run in this invocation");
  c_train->add_flag("--quiet", train.quiet, "Suppress per-step lines");

  EvalOptions eval;
  auto* c_eval = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset split");
  c_eval->add_option("--checkpoint", eval.checkpoint, "Checkpoint file")->required();
  c_eval->add_option("--data", eval.data, "Dataset directory or manifest")->required();
  c_eval->add_option("--split", eval.split, "Split to evaluate, or 'all'");
  c_eval->add_option("--k", eval.k, "Spans decoded per example");
  c_eval->add_option("--report", eval.report, "Metrics JSON output");
  c_eval->add_option("--predictions", eval.predictions, "Per-example JSONL output");

  GroundOptions ground;
  auto* c_ground = app.add_subcommand("ground", "Decode spans for one manifest entry");
  c_ground->add_option("--checkpoint", ground.checkpoint, "Checkpoint file")->required();
  c_ground->add_option("--data", ground.data, "Dataset directory or manifest")->required();
  c_ground->add_option("--id", ground.id, "Example id (default: first line)");
  c_ground->add_option("--k", ground.k, "Spans decoded");

  BootstrapOptions boot;
  auto* c_boot = app.add_subcommand("bootstrap", "Pseudo-label a dataset with a frame oracle");
  add_config_options(c_boot, boot.cfg);
  c_boot->add_option("--data", boot.data, "Dataset directory or manifest")->required();
  c_boot->add_option("--oracle", boot.oracle, "mock or replay:PATH");
  c_boot->add_option("--mode", boot.mode, "open or closed");
  c_boot->add_option("--out", boot.out, "Pseudo-label JSONL output")->required();
  c_boot->add_option("--split", boot.split, "Split to label, or 'all'");
  c_boot->add_flag("--literal-pseudocode", boot.literal_pseudocode,
                   "Use the literal stack pseudocode instead of the standard algorithm");
  c_boot->add_option("--gap-tolerance", boot.gap_tolerance, "Closed mode: join runs across gaps");

  BenchOptions bench;
  auto* c_bench = app.add_subcommand("bench", "Time span decoders across sequence lengths");
  c_bench->add_option("--strategies", bench.strategies, "Comma-separated strategies");
  c_bench->add_option("--sizes", bench.sizes, "Comma-separated sequence lengths");
  c_bench->add_option("--report", bench.report, "CSV output")->required();
  c_bench->add_option("--suite-examples", bench.suite_examples, "Score vectors per size");
  c_bench->add_option("--k", bench.k, "Spans decoded by multispan");
  c_bench->add_option("--noise", bench.score_noise, "Score noise std");
  c_bench->add_option("--seed", bench.seed, "Suite seed");
  c_bench->add_option("--min-batch-ms", bench.min_batch_ms, "Minimum timing batch length");
  c_bench->add_option("--batches", bench.batches, "Timing batches (minimum is kept)");

  GradcheckCmdOptions gc;
  auto* c_gc = app.add_subcommand("gradcheck", "Finite-difference check of the bridge backward pass");
  add_config_options(c_gc, gc.cfg);
  c_gc->add_option("--frames", gc.frames, "Sequence length");
  c_gc->add_option("--tokens", gc.tokens, "Query tokens including CLS");
  c_gc->add_option("--seed", gc.seed, "Parameter and input seed");
  c_gc->add_option("--tolerance", gc.tolerance, "Maximum relative error");
  c_gc->add_option("--fault", gc.fault, "Test hook: none, layer_norm_gain or matmul_rhs");
  c_gc->add_flag("--no-joint", gc.no_joint, "Check the cross-entropy path only");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (*c_synth) return cmd_synth(synth, out, err);
    if (*c_train) return cmd_train(train, out, err);
    if (*c_eval) return cmd_eval(eval, out, err);
    if (*c_ground) return cmd_ground(ground, out, err);
    if (*c_boot) return cmd_bootstrap(boot, out, err);
    if (*c_bench) return cmd_bench(bench, out, err);
    if (*c_gc) return cmd_gradcheck(gc, out, err);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const IoError& e) {
    err << "i/o error: " << e.what() << "\n";
    return kExitIo;
  } catch (const NonFiniteError& e) {
    err << "non-finite: " << e.what() << "\n";
    return kExitNonFinite;
  } catch (const CheckpointError& e) {
    err << "checkpoint error: " << e.what() << "\n";
    return kExitCheckpoint;
  } catch (const ValidationError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DimensionError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const nlohmann::json::exception& e) {
    err << "invalid JSON: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitFailure;
}

}  // namespace tgb::cli
