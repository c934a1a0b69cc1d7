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

#include "tgb/checkpoint.hpp"

#include <filesystem>
#include <string_view>

#include "binio.hpp"
#include "tgb/dataset.hpp"
#include "tgb/error.hpp"
#include "tgb/training.hpp"

namespace tgb {

using nlohmann::json;

namespace {

void put_record(std::string& out, const std::string& name, const Tensor<float>& t) {
  if (name.size() > 0xffff) throw CheckpointError("parameter name too long: " + name);
  if (t.rank() > 0xff) throw CheckpointError("rank too large for " + name);
  binio::put_le<std::uint16_t>(out, static_cast<std::uint16_t>(name.size()));
  out += name;
  binio::put_u8(out, static_cast<std::uint8_t>(t.rank()));
  for (std::size_t d : t.shape()) binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(d));
  for (float v : t.values()) binio::put_f32(out, v);
}

bool starts_with(std::string_view s, std::string_view p) { return s.substr(0, p.size()) == p; }

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["config"] = ckpt.config;
  header["state"] = {{"step", ckpt.step},
                     {"epoch", ckpt.epoch},
                     {"planned_steps", ckpt.planned_steps}};
  const std::string hs = header.dump();
  std::string out = "TGBC";
  binio::put_le<std::uint16_t>(out, kCheckpointVersion);
  binio::put_le<std::uint32_t>(out, static_cast<std::uint32_t>(hs.size()));
  out += hs;
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& e = ckpt.params.entry(i);
    put_record(out, e.name, e.value);
  }
  // Moments follow parameter order so the bytes are deterministic.
  for (std::size_t i = 0; i < ckpt.params.size(); ++i) {
    const auto& name = ckpt.params.entry(i).name;
    auto it = ckpt.moments.find(name);
    if (it == ckpt.moments.end()) continue;
    put_record(out, kMomentPrefixM + name, it->second.m);
    put_record(out, kMomentPrefixV + name, it->second.v);
  }
  for (std::uint64_t w : ckpt.rng) binio::put_le<std::uint64_t>(out, w);
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  binio::Reader r(bytes);
  if (r.bytes(4) != "TGBC") throw CheckpointError("bad checkpoint magic");
  const auto version = r.le<std::uint16_t>();
  if (!r.ok() || version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto hlen = r.le<std::uint32_t>();
  const std::string hs = r.bytes(hlen);
  if (!r.ok()) throw CheckpointError("truncated checkpoint header");
  Checkpoint ck;
  try {
    const json header = json::parse(hs);
    ck.config = header.at("config");
    const auto& st = header.at("state");
    ck.step = st.at("step").get<std::int64_t>();
    ck.epoch = st.at("epoch").get<std::size_t>();
    ck.planned_steps = st.at("planned_steps").get<std::int64_t>();
  } catch (const json::exception& e) {
    throw CheckpointError(std::string("bad checkpoint header: ") + e.what());
  }
  constexpr std::size_t kRngBytes = 4 * sizeof(std::uint64_t);
  while (r.ok() && r.remaining() > kRngBytes) {
    const auto nlen = r.le<std::uint16_t>();
    std::string name = r.bytes(nlen);
    const auto rank = r.le<std::uint8_t>();
    Shape shape(rank);
    for (auto& d : shape) d = r.le<std::uint32_t>();
    if (!r.ok()) break;
    const std::size_t n = shape_numel(shape);
    if (r.remaining() < 4 * n) throw CheckpointError("truncated record " + name);
    Tensor<float> t(shape);
    for (std::size_t i = 0; i < n; ++i) t[i] = r.f32();
    if (starts_with(name, kMomentPrefixM)) {
      ck.moments[name.substr(std::string_view(kMomentPrefixM).size())].m = std::move(t);
    } else if (starts_with(name, kMomentPrefixV)) {
      ck.moments[name.substr(std::string_view(kMomentPrefixV).size())].v = std::move(t);
    } else {
      try {
        ck.params.add(name, std::move(t));
      } catch (const Error& e) {
        throw CheckpointError(e.what());
      }
    }
  }
  if (!r.ok() || r.remaining() != kRngBytes) throw CheckpointError("truncated checkpoint body");
  for (auto& w : ck.rng) w = r.le<std::uint64_t>();
  for (const auto& [name, m] : ck.moments) {
    if (!ck.params.contains(name)) {
      throw CheckpointError("optimizer moments for unknown parameter " + name);
    }
    if (m.m.shape() != m.v.shape() ||
        m.m.shape() != ck.params.value(name).shape()) {
      throw CheckpointError("optimizer moment shape mismatch for " + name);
    }
  }
  return ck;
}

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  const std::string tmp = path + ".tmp";
  write_text_file(tmp, encode_checkpoint(ckpt));
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) throw IoError("cannot move checkpoint into place at " + path + ": " + ec.message());
}

Checkpoint load_checkpoint(const std::string& path) {
  const std::string bytes = read_text_file(path);
  try {
    return decode_checkpoint(bytes);
  } catch (const CheckpointError& e) {
    throw CheckpointError(path + ": " + e.what());
  }
}

void check_compatible(const ParamStore<float>& params, const Bridge<float>& bridge) {
  ParamStore<float> fresh;
  bridge.init_params(fresh, 0);
  for (std::size_t i = 0; i < fresh.size(); ++i) {
    const auto& want = fresh.entry(i);
    if (!params.contains(want.name)) {
      throw CheckpointError("checkpoint lacks parameter " + want.name);
    }
    const auto& have = params.value(want.name);
    if (have.shape() != want.value.shape()) {
      throw CheckpointError("parameter " + want.name + " has shape " +
                            shape_to_string(have.shape()) + ", config expects " +
                            shape_to_string(want.value.shape()));
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!fresh.contains(params.entry(i).name)) {
      throw CheckpointError("checkpoint has unexpected parameter " + params.entry(i).name);
    }
  }
}

Checkpoint snapshot(Trainer& trainer, const json& config) {
  Checkpoint ck;
  ck.config = config;
  ck.params = trainer.params();
  ck.moments = trainer.optimizer().moments();
  ck.step = trainer.step();
  ck.epoch = trainer.epochs_completed();
  ck.planned_steps = trainer.planned_steps();
  ck.rng = trainer.rng().state();
  return ck;
}

void restore(Trainer& trainer, const Checkpoint& ckpt) {
  check_compatible(ckpt.params, trainer.bridge());
  auto& params = trainer.params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto& e = params.entry(i);
    e.value = ckpt.params.value(e.name);
    e.grad = Tensor<float>(e.value.shape());
  }
  trainer.optimizer().moments() = ckpt.moments;
  trainer.restore_progress(ckpt.step, ckpt.epoch, ckpt.planned_steps, ckpt.rng);
}

}  // namespace tgb
