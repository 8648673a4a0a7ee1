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

#include <optional>
#include <string>
#include <vector>

#include "sne/checkpoint.hpp"
#include "sne/estimator.hpp"
#include "sne/rng.hpp"

namespace sne {

// Epoch-indexed training rules: which channel links the siblings, how many
// refinement steps per episode, how the noise decays and when the optimizer
// hands over from Adam to SGD.
struct TrainSchedule {
  int total_epochs = 300;
  int switch_epoch = 120;
  int reg_period = 8;
  int k_reg = 3;
  int k_plain = 2;
  double alpha = 0.1;
  double mu = 0.0;
  double sigma2_0 = 0.01;
  double lr0 = 2e-4;
  double lr_sgd = 2e-5;
  double clip = 15.0;
  int batch = 512;  // samples (patches)
  bool reg_comm_uses_err_matrix = true;

  void validate() const;
};

enum class ChannelKind : uint8_t { Comm = 0, RegComm = 1 };

std::string to_string(ChannelKind c);

struct EpochPlan {
  ChannelKind channel;
  int k;
};

// Every reg_period-th epoch (1-based) before the switch uses the regularized
// channel with k_reg steps; all other epochs use the plain channel with
// k_plain steps.
EpochPlan epoch_plan(int epoch, const TrainSchedule& schedule);

// Linear decay from sigma2_0 to zero at switch_epoch, zero afterwards.
double noise_variance(int epoch, double sigma2_0, int switch_epoch);

enum class OptimizerMode : uint8_t { Adam = 0, Sgd = 1 };

std::string to_string(OptimizerMode m);

struct OptimizerState {
  OptimizerMode mode = OptimizerMode::Adam;
  long step_count = 0;
  double lr = 0.0;
  std::vector<Tensor2> m, v;  // Adam moments, aligned with the trainable list

  static OptimizerState init(ParamVector& params);
};

// lr(epoch) while on Adam: lr0 * (1 - epoch/switch_epoch)^0.5.
double learning_rate(int epoch, const TrainSchedule& schedule);

// Hard-clips gradients to [-clip, clip], then applies Adam (beta1=0.9,
// beta2=0.999, eps=1e-8) before switch_epoch and plain SGD at lr_sgd after.
void apply_step(ParamVector& params, const std::vector<Tensor2>& grads, OptimizerState& opt,
                int epoch, const TrainSchedule& schedule);

// ---- Losses (built on a tape; all scalars are 1x1 values) ----

// H_Comm = || z_co W_err - z_src ||_2
Value comm_loss(GradTape& tape, Value z_src, Value z_co, Value w_err);

// H_Reg-Comm: the source state is perturbed by constant noise drawn outside
// the tape; sigma2=0 reduces exactly to comm_loss. With use_err_matrix=false
// the co-estimator state enters the channel unweighted.
Value reg_comm_loss(GradTape& tape, Value z_src, Value z_co, Value w_err, Value noise,
                    bool use_err_matrix);

// (1 / 2BK) sum_k sum_b sum_i (pred - target)^2, plain-tensor form.
double episode_mse(const std::vector<Tensor2>& targets,
                   const std::vector<std::vector<Tensor2>>& predictions);

// One patch sequence (one image channel in scan order) ready for training:
// per-patch context input rows and targets.
struct SequenceSample {
  std::vector<std::vector<Tensor2>> src_ctx;  // [patch][n] 1 x ctx_dim
  std::vector<std::vector<Tensor2>> co_ctx;
  std::vector<Tensor2> targets;  // [patch] 1 x patch_dim
};

SequenceSample make_sequence(const PatchGrid& grid, const QuantizedRepresentation& rep,
                             const ContextSpec& spec, int channel = 0);

// Constant per-step noise rows for the regularized channel, one 1 x state_dim
// tensor per (patch, step).
struct NoisePlan {
  bool active = false;
  std::vector<std::vector<Tensor2>> eps;  // [patch][k]
};

NoisePlan make_noise_plan(RngStream stream, int patches, int k, int state_dim, double mu,
                          double sigma2);

struct LossOptions {
  bool include_src_mse = true;
  bool include_co_mse = true;
  bool reg_comm_uses_err_matrix = true;
};

struct LossBreakdown {
  double total = 0.0;
  double mse_src = 0.0;
  double mse_co = 0.0;
  double channel = 0.0;
};

// Eq-for-eq total objective: both siblings' episode MSE plus alpha times the
// channel distance, averaged over the K step-pairs and all patches. The
// source runs the scan forward, the co-estimator runs it in reverse, and the
// channel pairs states at matching patch indices. `b_total` is the patch
// count of the full batch this call belongs to (it may exceed the patches
// passed here when the batch is evaluated sequence-by-sequence).
Value total_loss(GradTape& tape, const ParamValues& pv, const ModelShape& shape,
                 const std::vector<SequenceSample>& batch, int K, ChannelKind channel,
                 double alpha, const std::vector<NoisePlan>& noise, int b_total, SkipMode skip,
                 const LossOptions& options = {}, LossBreakdown* breakdown = nullptr);

// ---- Training loop ----

struct TrainConfig {
  TrainSchedule schedule;
  ModelShape shape;
  ContextSpec spec = ContextSpec::defaults();
  uint64_t seed = 1;
  int threads = 1;
  int val_decode_k = 2;
};

struct CorpusItem {
  ImageBuffer image;
  QuantizedRepresentation rep;
};

struct EpochLogRow {
  int epoch;
  ChannelKind channel;
  int k;
  double sigma2;
  double lr;
  OptimizerMode mode;
  double train_loss;
  double val_psnr;  // NaN when there is no validation set
};

struct TrainResult {
  SneParams params;
  std::vector<EpochLogRow> log;
};

// Initializes parameters U(-0.05, 0.05) from the seed, shuffles images every
// epoch, runs one optimizer step per image batch and logs one row per epoch.
// A fixed seed reproduces checkpoints and logs byte for byte, for any thread
// count: gradients are always evaluated per image on independent tapes and
// summed in image order.
TrainResult train(const std::vector<CorpusItem>& train_set,
                  const std::vector<CorpusItem>& val_set, const TrainConfig& config);

std::string log_header();
std::string log_row_text(const EpochLogRow& row);
std::string log_to_text(const std::vector<EpochLogRow>& log);

}  // namespace sne
