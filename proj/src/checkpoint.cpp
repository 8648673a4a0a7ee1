// Copyright (c) the SNE Toolkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "sne/checkpoint.hpp"

#include <map>

#include "sne/config.hpp"
#include "sne/wire.hpp"

namespace sne {
namespace {

constexpr char kSnecMagic[5] = {'S', 'N', 'E', 'C', '1'};

bool is_co_tensor(const std::string& name) {
  return name.rfind("ctx_co.", 0) == 0 || name.rfind("lstm_co.", 0) == 0 ||
         name.rfind("elman_co.", 0) == 0 || name.rfind("skip_co.", 0) == 0 || name == "w_err";
}

std::string meta_text(const SneParams& params, const ContextSpec& spec) {
  const ModelShape& s = params.shape;
  std::string out;
  out += "state_dim=" + std::to_string(s.state_dim) + "\n";
  out += "patch_edge=" + std::to_string(s.patch_edge) + "\n";
  out += "n_ctx=" + std::to_string(s.n_ctx) + "\n";
  out += "tied_ctx=" + std::string(s.tied_ctx ? "1" : "0") + "\n";
  out += "cell=" + to_string(s.cell) + "\n";
  out += "skip=" + to_string(s.skip) + "\n";
  out += "source_offsets=" + offsets_to_string(spec.source_offsets) + "\n";
  out += "co_offsets=" + offsets_to_string(spec.co_offsets) + "\n";
  return out;
}

struct RawTensor {
  std::string name;
  Tensor2 tensor;
};

std::vector<uint8_t> encode_raw(const std::string& meta, const std::vector<RawTensor>& tensors) {
  std::vector<uint8_t> out;
  wire::put_bytes(out, kSnecMagic, 5);
  wire::put_u32(out, 1);  // version
  wire::put_u32(out, static_cast<uint32_t>(meta.size()));
  wire::put_bytes(out, meta.data(), meta.size());
  wire::put_u64(out, tensors.size());
  for (const RawTensor& t : tensors) {
    wire::put_u16(out, static_cast<uint16_t>(t.name.size()));
    wire::put_bytes(out, t.name.data(), t.name.size());
    wire::put_u32(out, static_cast<uint32_t>(t.tensor.rows));
    wire::put_u32(out, static_cast<uint32_t>(t.tensor.cols));
    for (double v : t.tensor.data) wire::put_f64(out, v);
  }
  return out;
}

std::pair<std::string, std::vector<RawTensor>> decode_raw(const std::vector<uint8_t>& bytes) {
  wire::Reader r{bytes};
  if (r.str(5) != std::string(kSnecMagic, 5)) throw CheckpointError("bad SNEC magic");
  if (r.u32() != 1) throw CheckpointError("unsupported SNEC version");
  const uint32_t meta_len = r.u32();
  std::string meta = r.str(meta_len);
  const uint64_t count = r.u64();
  std::vector<RawTensor> tensors;
  tensors.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    RawTensor t;
    t.name = r.str(r.u16());
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    t.tensor = Tensor2(rows, cols);
    for (double& v : t.tensor.data) v = r.f64();
    tensors.push_back(std::move(t));
  }
  return {std::move(meta), std::move(tensors)};
}

}  // namespace

std::vector<uint8_t> encode_checkpoint(const SneParams& params, const ContextSpec& spec) {
  std::vector<RawTensor> tensors;
  for (const auto& [name, t] : params.tensors()) tensors.push_back({name, *t});
  return encode_raw(meta_text(params, spec), tensors);
}

Checkpoint decode_checkpoint(const std::vector<uint8_t>& bytes) {
  auto [meta, raw] = decode_raw(bytes);
  const KeyValueConfig cfg = KeyValueConfig::parse_text(meta);

  ModelShape shape;
  shape.state_dim = static_cast<int>(cfg.get_int("state_dim", 0));
  shape.patch_edge = static_cast<int>(cfg.get_int("patch_edge", 0));
  shape.n_ctx = static_cast<int>(cfg.get_int("n_ctx", 0));
  shape.tied_ctx = cfg.get_bool("tied_ctx", true);
  shape.cell = cell_from_string(cfg.get_string("cell", "lstm"));
  shape.skip = skip_from_string(cfg.get_string("skip", "none"));
  if (shape.state_dim <= 0 || shape.patch_edge <= 0 || shape.n_ctx <= 0) {
    throw CheckpointError("checkpoint metadata incomplete");
  }

  Checkpoint ck;
  ck.spec.source_offsets = offsets_from_string(cfg.require_string("source_offsets"));
  ck.spec.co_offsets = offsets_from_string(cfg.require_string("co_offsets"));

  std::map<std::string, Tensor2> by_name;
  for (RawTensor& t : raw) by_name.emplace(std::move(t.name), std::move(t.tensor));

  SneParams& p = ck.params;
  p.shape = shape;
  const auto take = [&by_name](const std::string& name, Tensor2* dst) {
    auto it = by_name.find(name);
    if (it == by_name.end()) return false;
    *dst = std::move(it->second);
    return true;
  };
  const auto require = [&take](const std::string& name, Tensor2* dst) {
    if (!take(name, dst)) {
      throw CheckpointError("checkpoint is missing source tensor " + name);
    }
  };

  const int n_mats = shape.tied_ctx ? 1 : shape.n_ctx;
  p.ctx_src.resize(n_mats);
  for (int i = 0; i < n_mats; ++i) require("ctx_src." + std::to_string(i), &p.ctx_src[i]);
  if (shape.cell == CellKind::Lstm) {
    require("lstm_src.w_i", &p.lstm_src.w_i);
    require("lstm_src.w_f", &p.lstm_src.w_f);
    require("lstm_src.w_o", &p.lstm_src.w_o);
    require("lstm_src.w_g", &p.lstm_src.w_g);
    require("lstm_src.b_i", &p.lstm_src.b_i);
    require("lstm_src.b_f", &p.lstm_src.b_f);
    require("lstm_src.b_o", &p.lstm_src.b_o);
    require("lstm_src.b_g", &p.lstm_src.b_g);
  } else {
    require("elman_src.u", &p.elman_src.u);
    require("elman_src.v", &p.elman_src.v);
  }
  require("dec.u", &p.dec_u);
  require("dec.c", &p.dec_c);
  require("skip_src.w_p", &p.skip_src.w_p);
  require("skip_src.b_p", &p.skip_src.b_p);

  // Co-estimator side is optional: present in full checkpoints, absent after
  // stripping.
  p.ctx_co.resize(n_mats);
  bool co_ok = true;
  for (int i = 0; i < n_mats; ++i)
    co_ok = co_ok && take("ctx_co." + std::to_string(i), &p.ctx_co[i]);
  if (shape.cell == CellKind::Lstm) {
    co_ok = co_ok && take("lstm_co.w_i", &p.lstm_co.w_i) && take("lstm_co.w_f", &p.lstm_co.w_f) &&
            take("lstm_co.w_o", &p.lstm_co.w_o) && take("lstm_co.w_g", &p.lstm_co.w_g) &&
            take("lstm_co.b_i", &p.lstm_co.b_i) && take("lstm_co.b_f", &p.lstm_co.b_f) &&
            take("lstm_co.b_o", &p.lstm_co.b_o) && take("lstm_co.b_g", &p.lstm_co.b_g);
  } else {
    co_ok = co_ok && take("elman_co.u", &p.elman_co.u) && take("elman_co.v", &p.elman_co.v);
  }
  co_ok = co_ok && take("w_err", &p.w_err);
  co_ok = co_ok && take("skip_co.w_p", &p.skip_co.w_p) && take("skip_co.b_p", &p.skip_co.b_p);
  p.has_co = co_ok;
  if (!co_ok) p.ctx_co.clear();
  return ck;
}

std::vector<uint8_t> strip_co_estimator(const std::vector<uint8_t>& bytes) {
  auto [meta, raw] = decode_raw(bytes);
  std::vector<RawTensor> kept;
  for (RawTensor& t : raw) {
    if (!is_co_tensor(t.name)) kept.push_back(std::move(t));
  }
  return encode_raw(meta, kept);
}

void save_checkpoint(const SneParams& params, const ContextSpec& spec, const std::string& path) {
  wire::write_file(path, encode_checkpoint(params, spec));
}

Checkpoint load_checkpoint(const std::string& path) {
  return decode_checkpoint(wire::read_file(path));
}

}  // namespace sne
