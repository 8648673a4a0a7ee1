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

#pragma once

#include <string>
#include <vector>

#include "sne/codec.hpp"
#include "sne/gradcheck.hpp"
#include "sne/patching.hpp"
#include "sne/rng.hpp"
#include "sne/tape.hpp"

namespace sne {

enum class CellKind : uint8_t { Lstm = 0, Elman = 1 };

// Which sibling's state updates are gated. SkipF gates the co-estimator
// only, SkipB the source estimator only.
enum class SkipMode : uint8_t { None = 0, SkipF = 1, SkipB = 2, SkipBoth = 3 };

inline bool skip_gates_source(SkipMode m) {
  return m == SkipMode::SkipB || m == SkipMode::SkipBoth;
}
inline bool skip_gates_co(SkipMode m) { return m == SkipMode::SkipF || m == SkipMode::SkipBoth; }

std::string to_string(CellKind k);
std::string to_string(SkipMode m);
CellKind cell_from_string(const std::string& s);
SkipMode skip_from_string(const std::string& s);

struct ModelShape {
  int state_dim = 64;
  int patch_edge = 8;
  int n_ctx = 4;  // context blocks per sibling
  bool tied_ctx = true;
  CellKind cell = CellKind::Lstm;
  SkipMode skip = SkipMode::None;

  int ctx_dim() const { return patch_edge * patch_edge; }
  int patch_dim() const { return patch_edge * patch_edge; }
};

// Gate matrices act on [e; h], so they are (2*state_dim) x state_dim.
struct LstmBlock {
  Tensor2 w_i, w_f, w_o, w_g;
  Tensor2 b_i, b_f, b_o, b_g;
};

// z = tanh(e u + z_prev v)
struct ElmanBlock {
  Tensor2 u, v;
};

// Update-probability head of the skip gate: delta = sigmoid(h w_p + b_p).
struct SkipGate {
  Tensor2 w_p;  // state_dim x 1
  Tensor2 b_p;  // 1 x 1
};

// Every trainable tensor of the sibling pair. The decoder head is shared by
// both siblings; the co-estimator tensors (ctx_co, cell co block, skip_co,
// w_err) are optional in checkpoints and absent after stripping.
struct SneParams {
  ModelShape shape;
  std::vector<Tensor2> ctx_src, ctx_co;  // size 1 when tied, n_ctx otherwise
  LstmBlock lstm_src, lstm_co;
  ElmanBlock elman_src, elman_co;
  Tensor2 dec_u;  // state_dim x patch_dim
  Tensor2 dec_c;  // 1 x patch_dim
  Tensor2 w_err;  // state_dim x state_dim
  SkipGate skip_src, skip_co;
  bool has_co = true;

  static SneParams init(const ModelShape& shape, RngStream& rng);

  // Named views over the trainable tensors, deterministic order. Includes
  // the co-estimator side only when present.
  ParamVector trainables();
  std::vector<std::pair<std::string, const Tensor2*>> tensors() const;
};

// Off-tape recurrent state of one sibling, carried across episodes along the
// scan order. `cell` has zero size for Elman cells; `uhat` is the skip-gate
// accumulator in [0,1], 1 at sequence start so the first step always updates.
struct SiblingState {
  Tensor2 h;
  Tensor2 cell;
  Tensor2 uhat;
};

SiblingState initial_sibling_state(const ModelShape& shape);

// ---- On-tape episode machinery ----

struct CellValues {
  Value w_i, w_f, w_o, w_g, b_i, b_f, b_o, b_g;  // lstm
  Value u, v;                                    // elman
};

struct SkipGateValues {
  Value w_p, b_p;
};

struct ParamValues {
  std::vector<Value> ctx_src, ctx_co;
  CellValues cell_src, cell_co;
  Value dec_u, dec_c, w_err;
  SkipGateValues skip_src, skip_co;
  bool with_co = false;
};

// Uploads parameters onto a tape, as named `param` leaves (training and
// gradient checking) or as constants (decoding).
ParamValues bind_params(GradTape& tape, const SneParams& p, bool with_co, bool as_constants);

struct SiblingValues {
  Value h, cell, uhat;
};

SiblingValues upload_state(GradTape& tape, const SiblingState& s);
SiblingState download_state(const GradTape& tape, const SiblingValues& v);

// e = phi_e(W_1 q_1 + ... + W_N q_N), phi_e identity. `w_ctx` holds one
// matrix when tied. Throws ShapeError if the block count differs from the
// untied matrix count.
Value transform_context(GradTape& tape, const std::vector<Value>& ctx_rows,
                        const std::vector<Value>& w_ctx);

// One recurrent update. With `gated`, the binary skip gate u = f_bin(uhat)
// chooses between the cell candidate and the previous state, and the
// accumulator advances by delta = sigmoid(h w_p + b_p) clamped so uhat stays
// in [0,1].
SiblingValues state_step(GradTape& tape, Value e, const SiblingValues& prev,
                         const CellValues& cell, CellKind kind, bool gated,
                         const SkipGateValues& gate);

// p_k = U s_k + c (identity head; clamping happens only at image assembly).
Value decode_head(GradTape& tape, Value h, Value dec_u, Value dec_c);

struct EpisodeResult {
  std::vector<Value> pred_src, pred_co;  // K entries (pred_co empty unless train)
  std::vector<Value> h_src, h_co;        // hidden state after each step
  SiblingValues carry_src, carry_co;
};

// K refinement steps for one target patch. The context transforms are
// computed once and re-fed at every step; with train=false the co-estimator
// is not evaluated at all.
EpisodeResult run_episode(GradTape& tape, const ParamValues& pv, const ModelShape& shape,
                          const std::vector<Value>& src_ctx_rows,
                          const std::vector<Value>& co_ctx_rows, const SiblingValues& in_src,
                          const SiblingValues& in_co, int K, SkipMode skip, bool train);

// Dequantized context blocks scaled by 1/patch_edge, ready for
// transform_context.
std::vector<Tensor2> context_input_rows(const ContextBlocks& ctx, const QuantTable& table);

struct DecodeStats {
  long episodes = 0;
  long state_steps = 0;
  double seconds = 0.0;
};

// Scan-ordered decode using only the source estimator; bit-identical whether
// or not co-estimator tensors are present.
ImageBuffer decode_image(const QuantizedRepresentation& rep, const SneParams& params,
                         const ContextSpec& spec, int K, DecodeStats* stats = nullptr);

}  // namespace sne
