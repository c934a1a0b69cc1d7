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

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <ostream>

#include "commands.hpp"
#include "tgb/autograd.hpp"
#include "tgb/bootstrap.hpp"
#include "tgb/checkpoint.hpp"
#include "tgb/dataset.hpp"
#include "tgb/error.hpp"
#include "tgb/gradcheck.hpp"
#include "tgb/synth.hpp"
#include "tgb/training.hpp"

namespace tgb::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// Sets patch[a][b]... = value along a dotted key.
void set_dotted(json& patch, const std::string& key, json value) {
  json* node = &patch;
  std::size_t start = 0;
  for (;;) {
    const auto dot = key.find('.', start);
    const std::string part = key.substr(start, dot - start);
    if (part.empty()) throw ConfigError("bad config key '" + key + "'");
    if (dot == std::string::npos) {
      (*node)[part] = std::move(value);
      return;
    }
    node = &(*node)[part];
    start = dot + 1;
  }
}

std::vector<GroundingExample> select_split(const Dataset& ds, const std::string& split) {
  bool has_splits = false;
  for (const auto& s : ds.splits) has_splits |= !s.empty();
  if (split == "all" || !has_splits) return ds.examples;
  auto out = ds.split(split);
  if (out.empty()) throw ValidationError("dataset has no examples in split '" + split + "'");
  return out;
}

void ensure_dir(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir);
}

json metrics_json(const GroundingMetrics& m) {
  return json{{"mIoU", m.miou}, {"IoU@0.3", m.at(0.3)}, {"IoU@0.5", m.at(0.5)}};
}

// The run config stored in a checkpoint; a malformed one is a checkpoint fault.
RunConfig checkpoint_config(const Checkpoint& ck) {
  try {
    auto cfg = RunConfig::from_json(ck.config);
    cfg.bridge.validate();
    return cfg;
  } catch (const Error& e) {
    throw CheckpointError(std::string("checkpoint config: ") + e.what());
  }
}

}  // namespace

RunConfig resolve_config(const ConfigOptions& opts, const json& flag_patch) {
  RunConfig cfg = opts.config_path.empty() ? RunConfig{} : load_run_config(opts.config_path);
  if (!flag_patch.is_null()) cfg = cfg.merged(flag_patch);
  json sets = json::object();
  for (const auto& s : opts.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw ConfigError("--set expects key=value, got '" + s + "'");
    const std::string raw = s.substr(eq + 1);
    json value = json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    set_dotted(sets, s.substr(0, eq), std::move(value));
  }
  if (!sets.empty()) cfg = cfg.merged(sets);
  apply_seed_override(cfg, seed_from_env());
  cfg.validate();
  return cfg;
}

int cmd_synth(const SynthOptions& o, std::ostream& out, std::ostream&) {
  json patch = json::object();
  if (o.num_examples) patch["synth"]["num_examples"] = *o.num_examples;
  if (o.frames) {
    patch["synth"]["min_frames"] = *o.frames;
    patch["synth"]["max_frames"] = *o.frames;
  }
  if (o.noise) patch["synth"]["noise_sigma"] = *o.noise;
  if (o.seed) patch["synth"]["seed"] = *o.seed;
  RunConfig cfg = resolve_config(o.cfg, patch);
  cfg.paths.out = o.out;
  const auto summary = write_dataset(cfg.synth, o.out, cfg.to_json());
  out << summary.to_json().dump() << "\n";
  return kExitOk;
}

int cmd_train(const TrainOptions& o, std::ostream& out, std::ostream& err) {
  std::optional<Checkpoint> ck;
  RunConfig cfg;
  if (!o.resume.empty()) {
    ck = load_checkpoint(o.resume);
    cfg = checkpoint_config(*ck);
  } else {
    json patch = json::object();
    if (o.epochs) patch["train"]["epochs"] = *o.epochs;
    if (!o.data.empty()) patch["paths"]["data"] = o.data;
    if (!o.labels.empty()) patch["paths"]["labels"] = o.labels;
    cfg = resolve_config(o.cfg, patch);
  }
  const std::string data = o.data.empty() ? cfg.paths.data : o.data;
  if (data.empty()) throw ConfigError("no dataset given (--data or paths.data)");
  const Dataset ds = load_dataset(data);
  auto examples = select_split(ds, o.split);
  const std::string labels = o.labels.empty() ? cfg.paths.labels : o.labels;
  if (!labels.empty()) {
    const auto records = read_pseudo_labels(labels);
    const std::size_t n = apply_pseudo_labels(examples, records);
    if (n == 0) err << "warning: no example received a usable pseudo label\n";
  }

  Trainer trainer(cfg.bridge, cfg.train);
  if (ck) restore(trainer, *ck);
  trainer.plan(examples);
  ensure_dir(o.out);
  const json config_json = cfg.to_json();

  std::size_t run_now = 0;
  json epochs = json::array();
  while (trainer.epochs_completed() < cfg.train.epochs &&
         (!o.stop_after || run_now < *o.stop_after)) {
    auto log = trainer.train_epoch(examples, [&](const StepLog& s) {
      if (o.quiet) return;
      out << json{{"step", s.step}, {"epoch", s.epoch}, {"loss", s.loss}, {"tau", s.tau}}.dump()
          << "\n";
    });
    ++run_now;
    char name[32];
    std::snprintf(name, sizeof(name), "epoch_%03zu.tgbc", log.epoch);
    const std::string path = (fs::path(o.out) / name).string();
    const auto snap = snapshot(trainer, config_json);
    save_checkpoint(path, snap);
    save_checkpoint((fs::path(o.out) / "last.tgbc").string(), snap);
    out << json{{"epoch", log.epoch}, {"mean_loss", log.mean_loss}, {"checkpoint", path}}.dump()
        << "\n";
    epochs.push_back({{"epoch", log.epoch}, {"mean_loss", log.mean_loss}});
  }
  json summary{{"config", config_json},
               {"epochs", epochs},
               {"steps", trainer.step()},
               {"epochs_completed", trainer.epochs_completed()}};
  write_text_file((fs::path(o.out) / "train_summary.json").string(), summary.dump(2) + "\n");
  out << json{{"done", trainer.epochs_completed() >= cfg.train.epochs},
              {"epochs_completed", trainer.epochs_completed()},
              {"steps", trainer.step()}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_eval(const EvalOptions& o, std::ostream& out, std::ostream&) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const RunConfig cfg = checkpoint_config(ck);
  const Bridge<float> bridge(cfg.bridge);
  check_compatible(ck.params, bridge);
  ParamStore<float> params = ck.params;
  const Dataset ds = load_dataset(o.data);
  const auto examples = select_split(ds, o.split);
  const std::size_t k = o.k.value_or(cfg.train.eval_k);
  if (k == 0) throw ConfigError("--k must be >= 1");
  const auto result = evaluate(examples, bridge, params, k);
  const json metrics = metrics_json(result.metrics);
  const json config_json = cfg.to_json();
  const json eval_info{{"k", k}, {"split", o.split}, {"examples", examples.size()}};

  std::string predictions_path = o.predictions;
  if (predictions_path.empty() && !o.report.empty()) predictions_path = o.report + ".predictions.jsonl";
  if (!predictions_path.empty()) {
    std::string lines;
    for (std::size_t i = 0; i < examples.size(); ++i) {
      lines += json{{"id", examples[i].id},
                    {"pred_spans", spans_to_json(result.predictions[i])},
                    {"gold_spans", spans_to_json(examples[i].gold_spans)},
                    {"iou", result.metrics.per_example[i]}}
                   .dump() +
               "\n";
    }
    write_text_file(predictions_path, lines);
    write_meta_sidecar(predictions_path, config_json, json{{"eval", eval_info}});
  }
  if (!o.report.empty()) {
    json report{{"config", config_json}, {"eval", eval_info}, {"metrics", metrics}};
    write_text_file(o.report, report.dump(2) + "\n");
  }
  out << metrics.dump() << "\n";
  return kExitOk;
}

int cmd_ground(const GroundOptions& o, std::ostream& out, std::ostream&) {
  const Checkpoint ck = load_checkpoint(o.checkpoint);
  const RunConfig cfg = checkpoint_config(ck);
  const Bridge<float> bridge(cfg.bridge);
  check_compatible(ck.params, bridge);
  ParamStore<float> params = ck.params;
  const Dataset ds = load_dataset(o.data);
  if (ds.examples.empty()) throw ValidationError("manifest " + o.data + " is empty");
  const GroundingExample* ex = &ds.examples.front();
  if (!o.id.empty()) {
    ex = nullptr;
    for (const auto& e : ds.examples) {
      if (e.id == o.id) ex = &e;
    }
    if (ex == nullptr) throw ValidationError("no example with id '" + o.id + "' in " + o.data);
  }
  const std::size_t k = o.k.value_or(cfg.train.eval_k);
  if (k == 0) throw ConfigError("--k must be >= 1");
  const auto logits = bridge.infer_logits(params, ex->motion, ex->query);
  const SpanSet spans = decode_spans(logits, k);
  out << json{{"id", ex->id}, {"num_frames", ex->num_frames()}, {"spans", spans_to_json(spans)}}
             .dump()
      << "\n";
  return kExitOk;
}

int cmd_bootstrap(const BootstrapOptions& o, std::ostream& out, std::ostream&) {
  const RunConfig cfg = resolve_config(o.cfg, json());
  const Dataset ds = load_dataset(o.data);
  const auto examples = select_split(ds, o.split);
  std::uint64_t world_seed = cfg.synth.world_seed;
  if (ds.config.is_object() && ds.config.contains("synth")) {
    world_seed = ds.config["synth"].value("world_seed", world_seed);
  }
  bool open = false;
  if (o.mode == "open") {
    open = true;
  } else if (o.mode != "closed") {
    throw ConfigError("--mode must be open or closed, got '" + o.mode + "'");
  }

  std::unique_ptr<AnswerOracle> oracle;
  if (o.oracle == "mock") {
    oracle = std::make_unique<MockOracle>(world_seed);
  } else if (o.oracle.rfind("replay:", 0) == 0) {
    auto replay = std::make_unique<ReplayOracle>(ReplayOracle::load(o.oracle.substr(7)));
    for (const auto& ex : examples) replay->require_frames(ex, open);
    oracle = std::move(replay);
  } else {
    throw ConfigError("--oracle must be mock or replay:PATH, got '" + o.oracle + "'");
  }

  PseudoLabelOptions plo;
  plo.literal_pseudocode = o.literal_pseudocode;
  std::vector<PseudoLabelRecord> records;
  std::vector<SpanSet> preds, golds;
  std::size_t labeled = 0;
  for (const auto& ex : examples) {
    std::vector<PseudoLabelRecord> mine;
    if (open) {
      mine.push_back(pseudo_label_open_ended(ex, *oracle, token_f1_similarity, plo));
    } else {
      auto cl = pseudo_label_close_ended(ex, *oracle, o.gap_tolerance);
      mine = std::move(cl.records);
      if (mine.empty()) {
        PseudoLabelRecord r;
        r.id = ex.id;
        r.provenance = Provenance::kCloseEnded;
        r.skip = true;
        mine.push_back(r);
      }
    }
    SpanSet spans = spans_from_records(mine);
    if (!spans.empty()) ++labeled;
    preds.push_back(std::move(spans));
    golds.push_back(ex.gold_spans);
    records.insert(records.end(), mine.begin(), mine.end());
  }
  write_pseudo_labels(o.out, records);
  write_meta_sidecar(o.out, cfg.to_json(),
                     json{{"oracle", o.oracle}, {"mode", o.mode}, {"split", o.split}});
  json stats{{"examples", examples.size()},
             {"labeled", labeled},
             {"skipped", examples.size() - labeled},
             {"records", records.size()}};
  if (!examples.empty()) stats["miou_vs_gold"] = evaluate_grounding(preds, golds).miou;
  out << stats.dump() << "\n";
  return kExitOk;
}

namespace {

struct FaultGuard {
  explicit FaultGuard(BackwardFault f) { set_backward_fault(f); }
  ~FaultGuard() { set_backward_fault(BackwardFault::kNone); }
};

BackwardFault parse_fault(const std::string& s) {
  if (s == "none") return BackwardFault::kNone;
  if (s == "layer_norm_gain") return BackwardFault::kLayerNormGain;
  if (s == "matmul_rhs") return BackwardFault::kMatmulRhs;
  throw ConfigError("--fault must be none, layer_norm_gain or matmul_rhs, got '" + s + "'");
}

}  // namespace

int cmd_gradcheck(const GradcheckCmdOptions& o, std::ostream& out, std::ostream& err) {
  auto setup = BridgeGradCheckSetup::tiny();
  if (!o.cfg.config_path.empty() || !o.cfg.sets.empty()) {
    // Start from the tiny bridge so a partial config only changes what it names.
    RunConfig base;
    base.bridge = setup.bridge;
    base.synth.feature_dim = setup.bridge.feature_dim;
    base.synth.vocab_size = setup.bridge.vocab_size;
    json patch = base.to_json();
    if (!o.cfg.config_path.empty()) {
      const RunConfig file = load_run_config(o.cfg.config_path);
      patch = file.to_json();
    }
    ConfigOptions only_sets{"", o.cfg.sets};
    setup.bridge = resolve_config(only_sets, patch).bridge;
  }
  if (o.frames == 0 || o.tokens == 0) throw ConfigError("--frames and --tokens must be >= 1");
  if (!(o.tolerance > 0.0)) throw ConfigError("--tolerance must be > 0");
  setup.frames = o.frames;
  setup.tokens = o.tokens;
  setup.seed = o.seed;
  setup.joint = !o.no_joint;

  FaultGuard guard(parse_fault(o.fault));
  const auto t0 = std::chrono::steady_clock::now();
  const auto report = check_bridge_gradients(setup);
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  for (const auto& e : report.entries) {
    out << json{{"parameter", e.name},
                {"max_rel_error", e.finite ? json(e.max_rel_error) : json("non-finite")},
                {"max_abs_error", e.max_abs_error},
                {"elements_max_rel_error", e.max_entry_rel_error}}
               .dump()
        << "\n";
  }
  const auto* bad = report.first_failure(o.tolerance);
  out << json{{"parameters", report.entries.size()},
              {"worst_rel_error", report.worst_rel_error()},
              {"tolerance", o.tolerance},
              {"passed", bad == nullptr},
              {"seconds", seconds}}
             .dump()
      << "\n";
  if (bad != nullptr) {
    err << "gradient check failed for " << bad->name << ": relative error "
        << (bad->finite ? std::to_string(bad->max_rel_error) : std::string("non-finite"))
        << " (tolerance " << o.tolerance << ")\n";
    return kExitGradcheck;
  }
  return kExitOk;
}

}  // namespace tgb::cli
