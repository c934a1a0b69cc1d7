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

#include "tgb/dataset.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "binio.hpp"
#include "tgb/error.hpp"

namespace tgb {

namespace fs = std::filesystem;
using nlohmann::json;

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path + " for writing");
  f.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!f) throw IoError("write failed for " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  if (f.bad()) throw IoError("read failed for " + path);
  return ss.str();
}

void write_feature_file(const std::string& path, const Tensor<float>& values) {
  if (values.rank() != 2) {
    throw DimensionError("feature tensor must be T x D, got " + shape_to_string(values.shape()));
  }
  std::string out = "TGBF";
  binio::put_le<std::uint16_t>(out, kFeatureFormatVersion);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(values.rows()));
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(values.cols()));
  out.reserve(out.size() + 4 * values.size());
  for (float v : values.values()) binio::put_f32(out, v);
  write_text_file(path, out);
}

Tensor<float> read_feature_file(const std::string& path) {
  const std::string data = read_text_file(path);
  binio::Reader r(data);
  if (r.bytes(4) != "TGBF") throw IoError(path + ": not a TGBF feature file");
  const auto version = r.le<std::uint16_t>();
  if (version != kFeatureFormatVersion) {
    throw IoError(path + ": unsupported feature version " + std::to_string(version));
  }
  const auto T = r.le<std::uint32_t>();
  const auto D = r.le<std::uint32_t>();
  if (!r.ok() || r.remaining() != std::size_t{4} * T * D) {
    throw IoError(path + ": truncated or oversized payload for " + std::to_string(T) + " x " +
                  std::to_string(D));
  }
  Tensor<float> t({T, D});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = r.f32();
  return t;
}

json DatasetSummary::to_json() const {
  return json{{"examples", examples}, {"total_frames", total_frames}, {"splits", splits}};
}

json spans_to_json(const SpanSet& spans) {
  json arr = json::array();
  for (const Span& s : spans.spans()) arr.push_back({s.begin, s.end});
  return arr;
}

SpanSet spans_from_json(const json& j) {
  if (!j.is_array()) throw ValidationError("spans must be an array of [begin, end] pairs");
  std::vector<Span> raw;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() ||
        !p[1].is_number_integer()) {
      throw ValidationError("bad span entry " + p.dump());
    }
    raw.push_back({p[0].get<std::int64_t>(), p[1].get<std::int64_t>()});
  }
  return union_spans(std::move(raw));
}

void write_meta_sidecar(const std::string& path, const json& resolved_config,
                        const json& extra) {
  json meta = extra;
  meta["config"] = resolved_config;
  write_text_file(path + ".meta.json", meta.dump(2) + "\n");
}

namespace {

void ensure_dir(const fs::path& p) {
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec || !fs::is_directory(p)) {
    throw IoError("cannot create directory " + p.string() + ": " + ec.message());
  }
}

json manifest_line(const GroundingExample& ex, const std::string& features_path,
                   const std::string& split) {
  json j;
  j["id"] = ex.id;
  j["features_path"] = features_path;
  j["num_frames"] = ex.num_frames();
  j["query_ids"] = ex.query.ids;
  j["answer"] = ex.answer;
  j["gold_spans"] = spans_to_json(ex.gold_spans);
  if (!ex.relevance.empty()) j["relevance"] = ex.relevance;
  if (!split.empty()) j["split"] = split;
  return j;
}

}  // namespace

DatasetSummary write_examples(const std::vector<GroundingExample>& examples,
                              const std::vector<std::string>& splits, const std::string& dir,
                              const json& resolved_config) {
  const fs::path root(dir);
  ensure_dir(root / "features");
  DatasetSummary summary;
  std::string manifest;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const auto& ex = examples[i];
    const std::string rel = "features/" + ex.id + ".tgbf";
    write_feature_file((root / rel).string(), ex.motion.values);
    const std::string split = i < splits.size() ? splits[i] : std::string();
    manifest += manifest_line(ex, rel, split).dump() + "\n";
    ++summary.examples;
    summary.total_frames += ex.num_frames();
    if (!split.empty()) ++summary.splits[split];
  }
  const std::string manifest_path = (root / "manifest.jsonl").string();
  write_text_file(manifest_path, manifest);
  write_meta_sidecar(manifest_path, resolved_config, json{{"summary", summary.to_json()}});
  return summary;
}

DatasetSummary write_dataset(const SynthConfig& cfg, const std::string& dir,
                             const json& resolved_config) {
  cfg.validate();
  const auto examples = generate_examples(cfg);
  std::vector<std::string> splits;
  splits.reserve(examples.size());
  for (std::size_t i = 0; i < examples.size(); ++i) {
    splits.emplace_back(split_name(split_of(cfg.seed, i)));
  }
  return write_examples(examples, splits, dir, resolved_config);
}

GroundingExample parse_manifest_line(const json& j, const std::string& base_dir,
                                     std::size_t vocab_size) {
  for (const char* key : {"id", "features_path", "num_frames", "query_ids", "gold_spans"}) {
    if (!j.contains(key)) throw ValidationError(std::string("manifest line lacks \"") + key + "\"");
  }
  GroundingExample ex;
  ex.id = j.at("id").get<std::string>();
  const fs::path fp(j.at("features_path").get<std::string>());
  const std::string full = fp.is_absolute() ? fp.string() : (fs::path(base_dir) / fp).string();
  ex.motion.values = read_feature_file(full);
  const auto frames = j.at("num_frames").get<std::size_t>();
  if (ex.motion.values.rows() != frames) {
    throw ValidationError("example " + ex.id + ": manifest says " + std::to_string(frames) +
                          " frames, features hold " + std::to_string(ex.motion.values.rows()));
  }
  ex.query.ids = j.at("query_ids").get<std::vector<int>>();
  if (vocab_size == 0) {
    for (int id : ex.query.ids) vocab_size = std::max<std::size_t>(vocab_size, id + 1);
  }
  ex.query.vocab_size = vocab_size;
  ex.answer = j.value("answer", std::string());
  ex.gold_spans = spans_from_json(j.at("gold_spans"));
  if (!ex.gold_spans.within(static_cast<std::int64_t>(frames))) {
    throw ValidationError("example " + ex.id + ": gold spans exceed " + std::to_string(frames) +
                          " frames");
  }
  if (j.contains("relevance")) {
    ex.relevance = j.at("relevance").get<std::vector<double>>();
    if (ex.relevance.size() != frames) {
      throw ValidationError("example " + ex.id + ": relevance length mismatch");
    }
  }
  ex.motion.validate();
  ex.query.validate();
  return ex;
}

std::vector<GroundingExample> Dataset::split(const std::string& name) const {
  std::vector<GroundingExample> out;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    if (splits[i] == name) out.push_back(examples[i]);
  }
  return out;
}

Dataset load_dataset(const std::string& path) {
  fs::path manifest(path);
  if (fs::is_directory(manifest)) manifest /= "manifest.jsonl";
  if (!fs::exists(manifest)) throw IoError("dataset manifest not found: " + manifest.string());
  Dataset ds;
  const fs::path meta_path = manifest.string() + ".meta.json";
  if (fs::exists(meta_path)) {
    try {
      const json meta = json::parse(read_text_file(meta_path.string()));
      ds.config = meta.value("config", json());
    } catch (const json::exception& e) {
      throw IoError(meta_path.string() + ": " + e.what());
    }
  }
  std::size_t vocab = 0;
  if (ds.config.is_object() && ds.config.contains("synth")) {
    vocab = ds.config["synth"].value("vocab_size", std::size_t{0});
  }
  const std::string base = manifest.parent_path().string();
  std::istringstream lines(read_text_file(manifest.string()));
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::exception& e) {
      throw IoError(manifest.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    try {
      ds.examples.push_back(parse_manifest_line(j, base, vocab));
    } catch (const json::exception& e) {
      throw ValidationError(manifest.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
    ds.splits.push_back(j.value("split", std::string()));
  }
  return ds;
}

void write_pseudo_labels(const std::string& path, std::span<const PseudoLabelRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json j;
    j["id"] = r.id;
    j["span"] = r.span ? json::array({r.span->begin, r.span->end}) : json(nullptr);
    j["area"] = r.area;
    j["provenance"] = std::string(provenance_name(r.provenance));
    j["skip"] = r.skip;
    out += j.dump() + "\n";
  }
  write_text_file(path, out);
}

std::vector<PseudoLabelRecord> read_pseudo_labels(const std::string& path) {
  std::istringstream lines(read_text_file(path));
  std::vector<PseudoLabelRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      PseudoLabelRecord r;
      r.id = j.at("id").get<std::string>();
      const auto& s = j.at("span");
      if (!s.is_null()) {
        r.span = Span{s.at(0).get<std::int64_t>(), s.at(1).get<std::int64_t>()};
        if (r.span->begin < 0 || r.span->begin > r.span->end) {
          throw ValidationError("invalid span " + s.dump());
        }
      }
      r.area = j.value("area", 0.0);
      r.provenance = parse_provenance(j.value("provenance", std::string("open_ended")));
      r.skip = j.value("skip", false);
      out.push_back(std::move(r));
    } catch (const json::exception& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw IoError(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::size_t apply_pseudo_labels(std::vector<GroundingExample>& examples,
                                std::span<const PseudoLabelRecord> records) {
  std::unordered_map<std::string, std::vector<PseudoLabelRecord>> by_id;
  for (const auto& r : records) by_id[r.id].push_back(r);
  std::size_t labeled = 0;
  for (auto& ex : examples) {
    auto it = by_id.find(ex.id);
    SpanSet spans;
    if (it != by_id.end()) spans = spans_from_records(it->second);
    const auto frames = static_cast<std::int64_t>(ex.num_frames());
    if (!spans.empty() && !spans.within(frames)) {
      throw ValidationError("pseudo label for " + ex.id + " exceeds " + std::to_string(frames) +
                            " frames");
    }
    ex.skip = spans.empty();
    ex.gold_spans = std::move(spans);
    if (!ex.skip) ++labeled;
  }
  return labeled;
}

}  // namespace tgb
