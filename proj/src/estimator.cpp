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

#include "sne/estimator.hpp"

#include <chrono>

namespace sne {

std::string to_string(CellKind k) { return k == CellKind::Lstm ? "lstm" : "elman"; }

std::string to_string(SkipMode m) {
  switch (m) {
    case SkipMode::None:
      return "none";
    case SkipMode::SkipF:
      return "skip_f";
    case SkipMode::SkipB:
      return "skip_b";
    case SkipMode::SkipBoth:
      return "skip_both";
  }
  return "none";
}

CellKind cell_from_string(const std::string& s) {
  if (s == "lstm") return CellKind::Lstm;
  if (s == "elman") return CellKind::Elman;
  throw ConfigError("unknown cell kind: " + s);
}

SkipMode skip_from_string(const std::string& s) {
  if (s == "none") return SkipMode::None;
  if (s == "skip_f") return SkipMode::SkipF;
  if (s == "skip_b") return SkipMode::SkipB;
  if (s == "skip_both") return SkipMode::SkipBoth;
  throw ConfigError("unknown skip mode: " + s);
}

namespace {

LstmBlock init_lstm(int state_dim, RngStream& rng) {
  LstmBlock b;
  const int in = 2 * state_dim;
  b.w_i = rng.uniform_tensor(in, state_dim, -0.05, 0.05);
  b.w_f = rng.uniform_tensor(in, state_dim, -0.05, 0.05);
  b.w_o = rng.uniform_tensor(in, state_dim, -0.05, 0.05);
  b.w_g = rng.uniform_tensor(in, state_dim, -0.05, 0.05);
  b.b_i = rng.uniform_tensor(1, state_dim, -0.05, 0.05);
  b.b_f = rng.uniform_tensor(1, state_dim, -0.05, 0.05);
  b.b_o = rng.uniform_tensor(1, state_dim, -0.05, 0.05);
  b.b_g = rng.uniform_tensor(1, state_dim, -0.05, 0.05);
  return b;
}

ElmanBlock init_elman(int state_dim, RngStream& rng) {
  ElmanBlock b;
  b.u = rng.uniform_tensor(state_dim, state_dim, -0.05, 0.05);
  b.v = rng.uniform_tensor(state_dim, state_dim, -0.05, 0.05);
  return b;
}

SkipGate init_skip(int state_dim, RngStream& rng) {
  SkipGate g;
  g.w_p = rng.uniform_tensor(state_dim, 1, -0.05, 0.05);
  g.b_p = rng.uniform_tensor(1, 1, -0.05, 0.05);
  return g;
}

void push_lstm(ParamVector& out, const std::string& prefix, LstmBlock& b) {
  out.push_back({prefix + ".w_i", &b.w_i});
  out.push_back({prefix + ".w_f", &b.w_f});
  out.push_back({prefix + ".w_o", &b.w_o});
  out.push_back({prefix + ".w_g", &b.w_g});
  out.push_back({prefix + ".b_i", &b.b_i});
  out.push_back({prefix + ".b_f", &b.b_f});
  out.push_back({prefix + ".b_o", &b.b_o});
  out.push_back({prefix + ".b_g", &b.b_g});
}

}  // namespace

SneParams SneParams::init(const ModelShape& shape, RngStream& rng) {
  SneParams p;
  p.shape = shape;
  const int n_mats = shape.tied_ctx ? 1 : shape.n_ctx;
  for (int i = 0; i < n_mats; ++i)
    p.ctx_src.push_back(rng.uniform_tensor(shape.ctx_dim(), shape.state_dim, -0.05, 0.05));
  for (int i = 0; i < n_mats; ++i)
    p.ctx_co.push_back(rng.uniform_tensor(shape.ctx_dim(), shape.state_dim, -0.05, 0.05));
  if (shape.cell == CellKind::Lstm) {
    p.lstm_src = init_lstm(shape.state_dim, rng);
    p.lstm_co = init_lstm(shape.state_dim, rng);
  } else {
    p.elman_src = init_elman(shape.state_dim, rng);
    p.elman_co = init_elman(shape.state_dim, rng);
  }
  p.dec_u = rng.uniform_tensor(shape.state_dim, shape.patch_dim(), -0.05, 0.05);
  p.dec_c = rng.uniform_tensor(1, shape.patch_dim(), -0.05, 0.05);
  p.w_err = rng.uniform_tensor(shape.state_dim, shape.state_dim, -0.05, 0.05);
  p.skip_src = init_skip(shape.state_dim, rng);
  p.skip_co = init_skip(shape.state_dim, rng);
  p.has_co = true;
  return p;
}

ParamVector SneParams::trainables() {
  ParamVector out;
  for (size_t i = 0; i < ctx_src.size(); ++i)
    out.push_back({"ctx_src." + std::to_string(i), &ctx_src[i]});
  if (shape.cell == CellKind::Lstm) {
    push_lstm(out, "lstm_src", lstm_src);
  } else {
    out.push_back({"elman_src.u", &elman_src.u});
    out.push_back({"elman_src.v", &elman_src.v});
  }
  out.push_back({"dec.u", &dec_u});
  out.push_back({"dec.c", &dec_c});
  if (skip_gates_source(shape.skip)) {
    out.push_back({"skip_src.w_p", &skip_src.w_p});
    out.push_back({"skip_src.b_p", &skip_src.b_p});
  }
  if (has_co) {
    for (size_t i = 0; i < ctx_co.size(); ++i)
      out.push_back({"ctx_co." + std::to_string(i), &ctx_co[i]});
    if (shape.cell == CellKind::Lstm) {
      push_lstm(out, "lstm_co", lstm_co);
    } else {
      out.push_back({"elman_co.u", &elman_co.u});
      out.push_back({"elman_co.v", &elman_co.v});
    }
    out.push_back({"w_err", &w_err});
    if (skip_gates_co(shape.skip)) {
      out.push_back({"skip_co.w_p", &skip_co.w_p});
      out.push_back({"skip_co.b_p", &skip_co.b_p});
    }
  }
  return out;
}

std::vector<std::pair<std::string, const Tensor2*>> SneParams::tensors() const {
  // The serialized set always includes the skip gates so a checkpoint can be
  // reloaded under any skip mode.
  std::vector<std::pair<std::string, const Tensor2*>> out;
  for (size_t i = 0; i < ctx_src.size(); ++i)
    out.emplace_back("ctx_src." + std::to_string(i), &ctx_src[i]);
  auto push_lstm_view = [&out](const std::string& prefix, const LstmBlock& b) {
    out.emplace_back(prefix + ".w_i", &b.w_i);
    out.emplace_back(prefix + ".w_f", &b.w_f);
    out.emplace_back(prefix + ".w_o", &b.w_o);
    out.emplace_back(prefix + ".w_g", &b.w_g);
    out.emplace_back(prefix + ".b_i", &b.b_i);
    out.emplace_back(prefix + ".b_f", &b.b_f);
    out.emplace_back(prefix + ".b_o", &b.b_o);
    out.emplace_back(prefix + ".b_g", &b.b_g);
  };
  if (shape.cell == CellKind::Lstm) {
    push_lstm_view("lstm_src", lstm_src);
  } else {
    out.emplace_back("elman_src.u", &elman_src.u);
    out.emplace_back("elman_src.v", &elman_src.v);
  }
  out.emplace_back("dec.u", &dec_u);
  out.emplace_back("dec.c", &dec_c);
  out.emplace_back("skip_src.w_p", &skip_src.w_p);
  out.emplace_back("skip_src.b_p", &skip_src.b_p);
  if (has_co) {
    for (size_t i = 0; i < ctx_co.size(); ++i)
      out.emplace_back("ctx_co." + std::to_string(i), &ctx_co[i]);
    if (shape.cell == CellKind::Lstm) {
      push_lstm_view("lstm_co", lstm_co);
    } else {
      out.emplace_back("elman_co.u", &elman_co.u);
      out.emplace_back("elman_co.v", &elman_co.v);
    }
    out.emplace_back("w_err", &w_err);
    out.emplace_back("skip_co.w_p", &skip_co.w_p);
    out.emplace_back("skip_co.b_p", &skip_co.b_p);
  }
  return out;
}

SiblingState initial_sibling_state(const ModelShape& shape) {
  SiblingState s;
  s.h = Tensor2(1, shape.state_dim);
  if (shape.cell == CellKind::Lstm) s.cell = Tensor2(1, shape.state_dim);
  s.uhat = Tensor2::full(1, 1, 1.0);
  return s;
}

namespace {

CellValues bind_cell(GradTape& tape, const SneParams& p, bool src, bool consts) {
  CellValues cv;
  const std::string prefix = src ? "src" : "co";
  auto up = [&](const std::string& name, const Tensor2& t) {
    return consts ? tape.constant(t) : tape.param(name, t);
  };
  if (p.shape.cell == CellKind::Lstm) {
    const LstmBlock& b = src ? p.lstm_src : p.lstm_co;
    cv.w_i = up("lstm_" + prefix + ".w_i", b.w_i);
    cv.w_f = up("lstm_" + prefix + ".w_f", b.w_f);
    cv.w_o = up("lstm_" + prefix + ".w_o", b.w_o);
    cv.w_g = up("lstm_" + prefix + ".w_g", b.w_g);
    cv.b_i = up("lstm_" + prefix + ".b_i", b.b_i);
    cv.b_f = up("lstm_" + prefix + ".b_f", b.b_f);
    cv.b_o = up("lstm_" + prefix + ".b_o", b.b_o);
    cv.b_g = up("lstm_" + prefix + ".b_g", b.b_g);
  } else {
    const ElmanBlock& b = src ? p.elman_src : p.elman_co;
    cv.u = up("elman_" + prefix + ".u", b.u);
    cv.v = up("elman_" + prefix + ".v", b.v);
  }
  return cv;
}

}  // namespace

ParamValues bind_params(GradTape& tape, const SneParams& p, bool with_co, bool as_constants) {
  ParamValues pv;
  pv.with_co = with_co;
  auto up = [&](const std::string& name, const Tensor2& t) {
    return as_constants ? tape.constant(t) : tape.param(name, t);
  };
  for (size_t i = 0; i < p.ctx_src.size(); ++i)
    pv.ctx_src.push_back(up("ctx_src." + std::to_string(i), p.ctx_src[i]));
  pv.cell_src = bind_cell(tape, p, /*src=*/true, as_constants);
  pv.dec_u = up("dec.u", p.dec_u);
  pv.dec_c = up("dec.c", p.dec_c);
  // Gates are bound even when the skip mode leaves them inactive; unused
  // leaves simply receive zero gradient.
  pv.skip_src.w_p = up("skip_src.w_p", p.skip_src.w_p);
  pv.skip_src.b_p = up("skip_src.b_p", p.skip_src.b_p);
  if (with_co) {
    if (!p.has_co) throw CheckpointError("co-estimator tensors are not present");
    for (size_t i = 0; i < p.ctx_co.size(); ++i)
      pv.ctx_co.push_back(up("ctx_co." + std::to_string(i), p.ctx_co[i]));
    pv.cell_co = bind_cell(tape, p, /*src=*/false, as_constants);
    pv.w_err = up("w_err", p.w_err);
    pv.skip_co.w_p = up("skip_co.w_p", p.skip_co.w_p);
    pv.skip_co.b_p = up("skip_co.b_p", p.skip_co.b_p);
  }
  return pv;
}

SiblingValues upload_state(GradTape& tape, const SiblingState& s) {
  SiblingValues v;
  v.h = tape.constant(s.h);
  if (s.cell.rows > 0) v.cell = tape.constant(s.cell);
  v.uhat = tape.constant(s.uhat);
  return v;
}

SiblingState download_state(const GradTape& tape, const SiblingValues& v) {
  SiblingState s;
  s.h = tape.value(v.h);
  if (v.cell.valid()) s.cell = tape.value(v.cell);
  s.uhat = tape.value(v.uhat);
  return s;
}

Value transform_context(GradTape& tape, const std::vector<Value>& ctx_rows,
                        const std::vector<Value>& w_ctx) {
  if (ctx_rows.empty()) throw ShapeError("transform_context: no context blocks");
  if (w_ctx.size() != 1 && w_ctx.size() != ctx_rows.size()) {
    throw ShapeError("transform_context: got " + std::to_string(ctx_rows.size()) +
                     " blocks for " + std::to_string(w_ctx.size()) + " context matrices");
  }
  Value e;
  for (size_t n = 0; n < ctx_rows.size(); ++n) {
    const Value w = w_ctx.size() == 1 ? w_ctx[0] : w_ctx[n];
    const Value term = tape.matmul(ctx_rows[n], w);
    e = n == 0 ? term : tape.add(e, term);
  }
  return e;
}

SiblingValues state_step(GradTape& tape, Value e, const SiblingValues& prev,
                         const CellValues& cell, CellKind kind, bool gated,
                         const SkipGateValues& gate) {
  Value h_cand, c_cand;
  if (kind == CellKind::Lstm) {
    const Value x = tape.concat_cols(e, prev.h);
    const Value i = tape.sigmoid(tape.add_row_broadcast(tape.matmul(x, cell.w_i), cell.b_i));
    const Value f = tape.sigmoid(tape.add_row_broadcast(tape.matmul(x, cell.w_f), cell.b_f));
    const Value o = tape.sigmoid(tape.add_row_broadcast(tape.matmul(x, cell.w_o), cell.b_o));
    const Value g = tape.tanh(tape.add_row_broadcast(tape.matmul(x, cell.w_g), cell.b_g));
    c_cand = tape.add(tape.mul(f, prev.cell), tape.mul(i, g));
    h_cand = tape.mul(o, tape.tanh(c_cand));
  } else {
    h_cand = tape.tanh(tape.add(tape.matmul(e, cell.u), tape.matmul(prev.h, cell.v)));
  }

  SiblingValues next;
  if (!gated) {
    next.h = h_cand;
    next.cell = c_cand;
    next.uhat = prev.uhat;
    return next;
  }

  const Value u = tape.binarize_st(prev.uhat);   // 1x1 in {0,1}
  const Value keep = tape.affine(u, -1.0, 1.0);  // 1-u
  next.h = tape.add(tape.mul_col_broadcast(h_cand, u), tape.mul_col_broadcast(prev.h, keep));
  if (kind == CellKind::Lstm) {
    next.cell =
        tape.add(tape.mul_col_broadcast(c_cand, u), tape.mul_col_broadcast(prev.cell, keep));
  }
  const Value delta =
      tape.sigmoid(tape.add(tape.matmul(next.h, gate.w_p), gate.b_p));  // 1x1
  // u=1: accumulator restarts at delta. u=0: it grows by delta, clamped so it
  // never exceeds 1.
  const Value headroom = tape.affine(prev.uhat, -1.0, 1.0);
  const Value grown = tape.add(prev.uhat, tape.min_elem(delta, headroom));
  next.uhat = tape.add(tape.mul(u, delta), tape.mul(keep, grown));
  return next;
}

Value decode_head(GradTape& tape, Value h, Value dec_u, Value dec_c) {
  return tape.add_row_broadcast(tape.matmul(h, dec_u), dec_c);
}

EpisodeResult run_episode(GradTape& tape, const ParamValues& pv, const ModelShape& shape,
                          const std::vector<Value>& src_ctx_rows,
                          const std::vector<Value>& co_ctx_rows, const SiblingValues& in_src,
                          const SiblingValues& in_co, int K, SkipMode skip, bool train) {
  if (K < 1) throw ParamError("episode length K must be >= 1");
  EpisodeResult out;
  const Value e_src = transform_context(tape, src_ctx_rows, pv.ctx_src);
  SiblingValues s = in_src;
  for (int k = 0; k < K; ++k) {
    s = state_step(tape, e_src, s, pv.cell_src, shape.cell, skip_gates_source(skip), pv.skip_src);
    out.h_src.push_back(s.h);
    out.pred_src.push_back(decode_head(tape, s.h, pv.dec_u, pv.dec_c));
  }
  out.carry_src = s;

  if (train) {
    const Value e_co = transform_context(tape, co_ctx_rows, pv.ctx_co);
    SiblingValues c = in_co;
    for (int k = 0; k < K; ++k) {
      c = state_step(tape, e_co, c, pv.cell_co, shape.cell, skip_gates_co(skip), pv.skip_co);
      out.h_co.push_back(c.h);
      out.pred_co.push_back(decode_head(tape, c.h, pv.dec_u, pv.dec_c));
    }
    out.carry_co = c;
  }
  return out;
}

std::vector<Tensor2> context_input_rows(const ContextBlocks& ctx, const QuantTable& table) {
  std::vector<Tensor2> rows;
  rows.reserve(ctx.blocks.size());
  const double inv_bound = 1.0 / coefficient_bound(table.block_edge);
  for (const Tensor2& b : ctx.blocks) {
    Tensor2 r = b;
    for (size_t i = 0; i < r.size(); ++i) r.data[i] *= table.entries[i] * inv_bound;
    rows.push_back(std::move(r));
  }
  return rows;
}

ImageBuffer decode_image(const QuantizedRepresentation& rep, const SneParams& params,
                         const ContextSpec& spec, int K, DecodeStats* stats) {
  if (params.shape.patch_edge != rep.table.block_edge) {
    throw GeometryError("checkpoint patch edge does not match representation");
  }
  const auto t0 = std::chrono::steady_clock::now();
  const ModelShape& shape = params.shape;

  PatchGrid grid;  // geometry only; decode has no targets
  grid.grid_rows = rep.grid_rows;
  grid.grid_cols = rep.grid_cols;
  grid.patch_edge = rep.table.block_edge;
  grid.mode = rep.mode;
  grid.scan = scan_order(grid.grid_rows, grid.grid_cols);

  ImageBuffer out(rep.height, rep.width, rep.channels);
  std::vector<Tensor2> patches(grid.patch_count());

  GradTape tape;
  const ParamValues pv = bind_params(tape, params, /*with_co=*/false, /*as_constants=*/true);
  const size_t base = tape.mark();

  for (int ch = 0; ch < rep.channels; ++ch) {
    SiblingState carry = initial_sibling_state(shape);
    for (int pos = 0; pos < grid.patch_count(); ++pos) {
      const int target = grid.scan[pos];
      const auto [src_ctx, co_ctx] = context_for(grid, rep, target, spec, ch);
      (void)co_ctx;  // discarded at decode time
      const std::vector<Tensor2> rows = context_input_rows(src_ctx, rep.table);

      std::vector<Value> row_vals;
      row_vals.reserve(rows.size());
      for (const Tensor2& r : rows) row_vals.push_back(tape.constant(r));
      const SiblingValues in = upload_state(tape, carry);
      const EpisodeResult ep = run_episode(tape, pv, shape, row_vals, {}, in, {}, K, shape.skip,
                                           /*train=*/false);
      patches[target] = tape.value(ep.pred_src.back());
      carry = download_state(tape, ep.carry_src);
      tape.truncate(base);
      if (stats != nullptr) {
        ++stats->episodes;
        stats->state_steps += K;
      }
    }
    const ImageBuffer plane = assemble_patches(patches, grid.grid_rows, grid.grid_cols,
                                               grid.patch_edge, grid.mode);
    for (int y = 0; y < rep.height; ++y)
      for (int x = 0; x < rep.width; ++x) out.at(y, x, ch) = plane.at(y, x);
  }
  if (stats != nullptr) {
    stats->seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  return out;
}

}  // namespace sne
