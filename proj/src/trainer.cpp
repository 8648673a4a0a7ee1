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

#include "sne/trainer.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <thread>

#include "sne/metrics.hpp"

namespace sne {

void TrainSchedule::validate() const {
  if (total_epochs < 1) throw ParamError("total_epochs must be >= 1");
  if (switch_epoch < 1) throw ParamError("switch_epoch must be >= 1");
  if (k_reg < 1 || k_plain < 1) throw ParamError("episode lengths must be >= 1");
  if (reg_period < 1) throw ParamError("reg_period must be >= 1");
  if (clip <= 0.0) throw ParamError("clip must be > 0");
  if (sigma2_0 < 0.0) throw ParamError("sigma2_0 must be >= 0");
  if (batch < 1) throw ParamError("batch must be >= 1");
}

std::string to_string(ChannelKind c) { return c == ChannelKind::Comm ? "comm" : "reg_comm"; }

std::string to_string(OptimizerMode m) { return m == OptimizerMode::Adam ? "adam" : "sgd"; }

EpochPlan epoch_plan(int epoch, const TrainSchedule& schedule) {
  if (epoch < 0) throw ParamError("epoch must be >= 0");
  const bool reg = (epoch + 1) % schedule.reg_period == 0 && epoch < schedule.switch_epoch;
  if (reg) return {ChannelKind::RegComm, schedule.k_reg};
  return {ChannelKind::Comm, schedule.k_plain};
}

double noise_variance(int epoch, double sigma2_0, int switch_epoch) {
  if (epoch < 0) throw ParamError("epoch must be >= 0");
  const double frac = 1.0 - static_cast<double>(epoch) / switch_epoch;
  return sigma2_0 * std::max(0.0, frac);
}

OptimizerState OptimizerState::init(ParamVector& params) {
  OptimizerState s;
  s.m.reserve(params.size());
  s.v.reserve(params.size());
  for (const NamedParam& p : params) {
    s.m.emplace_back(p.tensor->rows, p.tensor->cols);
    s.v.emplace_back(p.tensor->rows, p.tensor->cols);
  }
  return s;
}

double learning_rate(int epoch, const TrainSchedule& schedule) {
  if (epoch >= schedule.switch_epoch) return schedule.lr_sgd;
  return schedule.lr0 * std::sqrt(1.0 - static_cast<double>(epoch) / schedule.switch_epoch);
}

void apply_step(ParamVector& params, const std::vector<Tensor2>& grads, OptimizerState& opt,
                int epoch, const TrainSchedule& schedule) {
  if (grads.size() != params.size()) throw ShapeError("apply_step: gradient list size mismatch");
  const OptimizerMode mode =
      epoch < schedule.switch_epoch ? OptimizerMode::Adam : OptimizerMode::Sgd;
  opt.mode = mode;
  opt.lr = learning_rate(epoch, schedule);
  ++opt.step_count;

  constexpr double kBeta1 = 0.9;
  constexpr double kBeta2 = 0.999;
  constexpr double kEps = 1e-8;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(opt.step_count));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(opt.step_count));

  for (size_t i = 0; i < params.size(); ++i) {
    Tensor2& theta = *params[i].tensor;
    const Tensor2& g = grads[i];
    if (!theta.same_shape(g)) {
      throw ShapeError("apply_step: gradient shape " + g.shape_str() + " for parameter " +
                       params[i].name + " " + theta.shape_str());
    }
    for (size_t j = 0; j < theta.size(); ++j) {
      double gj = g.data[j];
      if (gj > schedule.clip) gj = schedule.clip;
      if (gj < -schedule.clip) gj = -schedule.clip;
      if (mode == OptimizerMode::Adam) {
        double& mj = opt.m[i].data[j];
        double& vj = opt.v[i].data[j];
        mj = kBeta1 * mj + (1.0 - kBeta1) * gj;
        vj = kBeta2 * vj + (1.0 - kBeta2) * gj * gj;
        const double mhat = mj / bc1;
        const double vhat = vj / bc2;
        theta.data[j] -= opt.lr * mhat / (std::sqrt(vhat) + kEps);
      } else {
        theta.data[j] -= opt.lr * gj;
      }
    }
  }
}

Value comm_loss(GradTape& tape, Value z_src, Value z_co, Value w_err) {
  return tape.l2norm_rows(tape.sub(tape.matmul(z_co, w_err), z_src));
}

Value reg_comm_loss(GradTape& tape, Value z_src, Value z_co, Value w_err, Value noise,
                    bool use_err_matrix) {
  const Value weakened = use_err_matrix ? tape.matmul(z_co, w_err) : z_co;
  return tape.l2norm_rows(tape.sub(weakened, tape.add(z_src, noise)));
}

double episode_mse(const std::vector<Tensor2>& targets,
                   const std::vector<std::vector<Tensor2>>& predictions) {
  if (targets.size() != predictions.size() || targets.empty()) {
    throw ShapeError("episode_mse: need one prediction list per target");
  }
  const size_t k = predictions[0].size();
  double sse = 0.0;
  for (size_t b = 0; b < targets.size(); ++b) {
    if (predictions[b].size() != k) throw ShapeError("episode_mse: ragged prediction lists");
    for (size_t step = 0; step < k; ++step) {
      require_same_shape(targets[b], predictions[b][step], "episode_mse");
      for (size_t i = 0; i < targets[b].size(); ++i) {
        const double d = predictions[b][step].data[i] - targets[b].data[i];
        sse += d * d;
      }
    }
  }
  return sse / (2.0 * static_cast<double>(targets.size()) * static_cast<double>(k));
}

SequenceSample make_sequence(const PatchGrid& grid, const QuantizedRepresentation& rep,
                             const ContextSpec& spec, int channel) {
  SequenceSample seq;
  const int patches = grid.patch_count();
  seq.src_ctx.reserve(patches);
  seq.co_ctx.reserve(patches);
  seq.targets.reserve(patches);
  for (int pos = 0; pos < patches; ++pos) {
    const int target = grid.scan[pos];
    auto [src, co] = context_for(grid, rep, target, spec, channel);
    seq.src_ctx.push_back(context_input_rows(src, rep.table));
    seq.co_ctx.push_back(context_input_rows(co, rep.table));
    seq.targets.push_back(grid.targets[target]);
  }
  return seq;
}

NoisePlan make_noise_plan(RngStream stream, int patches, int k, int state_dim, double mu,
                          double sigma2) {
  NoisePlan plan;
  plan.active = true;
  plan.eps.resize(patches);
  for (int j = 0; j < patches; ++j) {
    plan.eps[j].reserve(k);
    for (int step = 0; step < k; ++step) {
      plan.eps[j].push_back(stream.gaussian_tensor(1, state_dim, mu, sigma2));
    }
  }
  return plan;
}

Value total_loss(GradTape& tape, const ParamValues& pv, const ModelShape& shape,
                 const std::vector<SequenceSample>& batch, int K, ChannelKind channel,
                 double alpha, const std::vector<NoisePlan>& noise, int b_total, SkipMode skip,
                 const LossOptions& options, LossBreakdown* breakdown) {
  if (batch.empty()) throw ParamError("total_loss: empty batch");
  if (!noise.empty() && noise.size() != batch.size()) {
    throw ShapeError("total_loss: need one noise plan per sequence");
  }
  const double mse_norm = 1.0 / (2.0 * static_cast<double>(b_total) * K);
  const double ch_norm = alpha / (static_cast<double>(b_total) * K);

  Value loss;
  LossBreakdown acc;
  for (size_t s = 0; s < batch.size(); ++s) {
    const SequenceSample& seq = batch[s];
    const int patches = static_cast<int>(seq.targets.size());

    std::vector<Value> target_vals(patches);
    for (int j = 0; j < patches; ++j) target_vals[j] = tape.constant(seq.targets[j]);

    // Source pass, front to back along the scan.
    std::vector<std::vector<Value>> h_src(patches), p_src(patches);
    {
      SiblingValues state = upload_state(tape, initial_sibling_state(shape));
      for (int j = 0; j < patches; ++j) {
        std::vector<Value> rows;
        rows.reserve(seq.src_ctx[j].size());
        for (const Tensor2& r : seq.src_ctx[j]) rows.push_back(tape.constant(r));
        const Value e = transform_context(tape, rows, pv.ctx_src);
        for (int k = 0; k < K; ++k) {
          state = state_step(tape, e, state, pv.cell_src, shape.cell, skip_gates_source(skip),
                             pv.skip_src);
          h_src[j].push_back(state.h);
          p_src[j].push_back(decode_head(tape, state.h, pv.dec_u, pv.dec_c));
        }
      }
    }

    // Co-estimator pass, back to front; its recurrence runs toward earlier
    // patches, which realizes the future-state update of the second sibling.
    std::vector<std::vector<Value>> h_co(patches), p_co(patches);
    {
      SiblingValues state = upload_state(tape, initial_sibling_state(shape));
      for (int j = patches - 1; j >= 0; --j) {
        std::vector<Value> rows;
        rows.reserve(seq.co_ctx[j].size());
        for (const Tensor2& r : seq.co_ctx[j]) rows.push_back(tape.constant(r));
        const Value e = transform_context(tape, rows, pv.ctx_co);
        for (int k = 0; k < K; ++k) {
          state =
              state_step(tape, e, state, pv.cell_co, shape.cell, skip_gates_co(skip), pv.skip_co);
          h_co[j].push_back(state.h);
          p_co[j].push_back(decode_head(tape, state.h, pv.dec_u, pv.dec_c));
        }
      }
    }

    // Assemble this sequence's share of the objective in (patch, step) order.
    Value sse;
    for (int j = 0; j < patches; ++j) {
      for (int k = 0; k < K; ++k) {
        if (options.include_src_mse) {
          const Value term = tape.sum_sq(tape.sub(p_src[j][k], target_vals[j]));
          sse = sse.valid() ? tape.add(sse, term) : term;
          acc.mse_src += tape.scalar(term) * mse_norm;
        }
        if (options.include_co_mse) {
          const Value term = tape.sum_sq(tape.sub(p_co[j][k], target_vals[j]));
          sse = sse.valid() ? tape.add(sse, term) : term;
          acc.mse_co += tape.scalar(term) * mse_norm;
        }
      }
    }

    Value ch;
    if (alpha != 0.0) {
      for (int j = 0; j < patches; ++j) {
        for (int k = 0; k < K; ++k) {
          Value term;
          if (channel == ChannelKind::RegComm) {
            const Tensor2& eps = noise.at(s).eps.at(j).at(k);
            term = reg_comm_loss(tape, h_src[j][k], h_co[j][k], pv.w_err, tape.constant(eps),
                                 options.reg_comm_uses_err_matrix);
          } else {
            term = comm_loss(tape, h_src[j][k], h_co[j][k], pv.w_err);
          }
          ch = ch.valid() ? tape.add(ch, term) : term;
        }
      }
    }

    Value seq_loss;
    if (sse.valid()) seq_loss = tape.affine(sse, mse_norm, 0.0);
    if (ch.valid()) {
      const Value weighted = tape.affine(ch, ch_norm, 0.0);
      acc.channel += tape.scalar(weighted);
      seq_loss = seq_loss.valid() ? tape.add(seq_loss, weighted) : weighted;
    }
    if (!seq_loss.valid()) seq_loss = tape.constant(Tensor2(1, 1));
    loss = loss.valid() ? tape.add(loss, seq_loss) : seq_loss;
  }

  acc.total = tape.scalar(loss);
  if (breakdown != nullptr) *breakdown = acc;
  return loss;
}

namespace {

constexpr uint64_t kTagInit = 0x696e6974;      // "init"
constexpr uint64_t kTagShuffle = 0x73687566;   // "shuf"
constexpr uint64_t kTagNoise = 0x6e6f6973;     // "nois"

struct SeqEntry {
  SequenceSample sample;
  int stable_id = 0;
  int patches = 0;
};

struct SeqGrads {
  double loss = 0.0;
  std::vector<Tensor2> grads;  // aligned with the trainable list
};

// Loss and gradients for one sequence on its own tape, normalized for a
// batch of b_total patches.
SeqGrads eval_sequence(const SneParams& params_const, const std::vector<std::string>& names,
                       const SequenceSample& seq, const EpochPlan& plan, double alpha,
                       const NoisePlan* noise_plan, int b_total, SkipMode skip,
                       const LossOptions& options) {
  GradTape tape;
  ParamValues pv = bind_params(tape, params_const, /*with_co=*/true, /*as_constants=*/false);
  std::vector<NoisePlan> noise;
  if (noise_plan != nullptr) noise.push_back(*noise_plan);
  const Value loss = total_loss(tape, pv, params_const.shape, {seq}, plan.k, plan.channel, alpha,
                                noise, b_total, skip, options);
  tape.backward(loss);

  SeqGrads out;
  out.loss = tape.scalar(loss);
  out.grads.reserve(names.size());
  for (const std::string& name : names) {
    const Tensor2* g = tape.param_grad(name);
    if (g == nullptr) throw ParamError("missing gradient for " + name);
    out.grads.push_back(*g);
  }
  return out;
}

double validation_psnr(const std::vector<CorpusItem>& val_set, const SneParams& params,
                       const ContextSpec& spec, int k) {
  if (val_set.empty()) return std::nan("");
  double sum = 0.0;
  for (const CorpusItem& item : val_set) {
    const ImageBuffer decoded = decode_image(item.rep, params, spec, k);
    sum += psnr(decoded, item.image);
  }
  return sum / static_cast<double>(val_set.size());
}

}  // namespace

TrainResult train(const std::vector<CorpusItem>& train_set,
                  const std::vector<CorpusItem>& val_set, const TrainConfig& config) {
  config.schedule.validate();
  config.spec.validate();
  if (train_set.empty()) throw ParamError("training corpus is empty");

  // Surface geometry problems before epoch 0.
  std::vector<SeqEntry> sequences;
  for (const CorpusItem& item : train_set) {
    if (item.rep.table.block_edge != config.shape.patch_edge) {
      throw GeometryError("corpus block edge does not match model patch edge");
    }
    for (int ch = 0; ch < item.image.channels; ++ch) {
      const PatchGrid grid = build_grid(item.image, config.shape.patch_edge, item.rep.mode, ch);
      SeqEntry entry;
      entry.sample = make_sequence(grid, item.rep, config.spec, ch);
      entry.stable_id = static_cast<int>(sequences.size());
      entry.patches = grid.patch_count();
      sequences.push_back(std::move(entry));
    }
  }

  const RngStream root(config.seed);
  RngStream init_stream = root.derive(kTagInit);
  TrainResult result;
  result.params = SneParams::init(config.shape, init_stream);

  ParamVector trainables = result.params.trainables();
  std::vector<std::string> names;
  names.reserve(trainables.size());
  for (const NamedParam& p : trainables) names.push_back(p.name);
  OptimizerState opt = OptimizerState::init(trainables);

  const int threads = std::max(1, config.threads);

  for (int epoch = 0; epoch < config.schedule.total_epochs; ++epoch) {
    const EpochPlan plan = epoch_plan(epoch, config.schedule);
    const double sigma2 =
        noise_variance(epoch, config.schedule.sigma2_0, config.schedule.switch_epoch);

    // Per-epoch uniform shuffle of the sequence order.
    std::vector<int> order(sequences.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    RngStream shuffle_stream = root.derive(kTagShuffle, static_cast<uint64_t>(epoch));
    for (size_t i = order.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(shuffle_stream.next_u64() % i);
      std::swap(order[i - 1], order[j]);
    }

    // Group shuffled sequences into batches of at most `batch` patches.
    std::vector<std::vector<int>> batches;
    std::vector<int> current;
    int current_patches = 0;
    for (int idx : order) {
      const int p = sequences[idx].patches;
      if (!current.empty() && current_patches + p > config.schedule.batch) {
        batches.push_back(current);
        current.clear();
        current_patches = 0;
      }
      current.push_back(idx);
      current_patches += p;
    }
    if (!current.empty()) batches.push_back(current);

    double epoch_loss = 0.0;
    for (const std::vector<int>& batch : batches) {
      int b_total = 0;
      for (int idx : batch) b_total += sequences[idx].patches;

      // Noise is keyed by (epoch, stable sequence id) so thread layout and
      // batch composition cannot change the draws.
      std::vector<NoisePlan> noise(batch.size());
      if (plan.channel == ChannelKind::RegComm) {
        for (size_t i = 0; i < batch.size(); ++i) {
          const SeqEntry& seq = sequences[batch[i]];
          noise[i] = make_noise_plan(
              root.derive(kTagNoise, (static_cast<uint64_t>(epoch) << 20) ^
                                         static_cast<uint64_t>(seq.stable_id)),
              seq.patches, plan.k, config.shape.state_dim, config.schedule.mu, sigma2);
        }
      }

      // Evaluate every sequence on its own tape, then reduce in batch order;
      // the reduction order is what keeps any thread count bit-identical.
      LossOptions loss_options;
      loss_options.reg_comm_uses_err_matrix = config.schedule.reg_comm_uses_err_matrix;
      std::vector<SeqGrads> results(batch.size());
      if (threads == 1 || batch.size() == 1) {
        for (size_t i = 0; i < batch.size(); ++i) {
          results[i] = eval_sequence(result.params, names, sequences[batch[i]].sample, plan,
                                     config.schedule.alpha,
                                     noise[i].active ? &noise[i] : nullptr, b_total,
                                     config.shape.skip, loss_options);
        }
      } else {
        std::atomic<size_t> next{0};
        auto worker = [&]() {
          while (true) {
            const size_t i = next.fetch_add(1);
            if (i >= batch.size()) return;
            results[i] = eval_sequence(result.params, names, sequences[batch[i]].sample, plan,
                                       config.schedule.alpha,
                                       noise[i].active ? &noise[i] : nullptr, b_total,
                                       config.shape.skip, loss_options);
          }
        };
        std::vector<std::thread> pool;
        const size_t n_threads = std::min(static_cast<size_t>(threads), batch.size());
        pool.reserve(n_threads);
        for (size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
        for (std::thread& t : pool) t.join();
      }

      double batch_loss = 0.0;
      std::vector<Tensor2> grads;
      grads.reserve(trainables.size());
      for (const NamedParam& p : trainables) grads.emplace_back(p.tensor->rows, p.tensor->cols);
      for (const SeqGrads& r : results) {
        batch_loss += r.loss;
        for (size_t i = 0; i < grads.size(); ++i) {
          for (size_t j = 0; j < grads[i].size(); ++j) grads[i].data[j] += r.grads[i].data[j];
        }
      }

      apply_step(trainables, grads, opt, epoch, config.schedule);
      epoch_loss += batch_loss;
    }
    epoch_loss /= static_cast<double>(batches.size());

    for (const NamedParam& p : trainables) {
      if (!p.tensor->all_finite()) {
        throw ParamError("parameter " + p.name + " became non-finite at epoch " +
                         std::to_string(epoch));
      }
    }

    EpochLogRow row;
    row.epoch = epoch;
    row.channel = plan.channel;
    row.k = plan.k;
    row.sigma2 = sigma2;
    row.lr = opt.lr;
    row.mode = opt.mode;
    row.train_loss = epoch_loss;
    row.val_psnr = validation_psnr(val_set, result.params, config.spec, config.val_decode_k);
    result.log.push_back(row);
  }
  return result;
}

std::string log_header() { return "epoch,channel,K,sigma2,lr,mode,train_loss,val_psnr"; }

std::string log_row_text(const EpochLogRow& row) {
  char buf[256];
  std::snprintf(buf, sizeof(buf), "%d,%s,%d,%.17g,%.17g,%s,%.17g,%.17g", row.epoch,
                to_string(row.channel).c_str(), row.k, row.sigma2, row.lr,
                to_string(row.mode).c_str(), row.train_loss, row.val_psnr);
  return buf;
}

std::string log_to_text(const std::vector<EpochLogRow>& log) {
  std::string out = log_header() + "\n";
  for (const EpochLogRow& row : log) out += log_row_text(row) + "\n";
  return out;
}

}  // namespace sne
