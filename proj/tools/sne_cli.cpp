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

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "sne/checkpoint.hpp"
#include "sne/config.hpp"
#include "sne/metrics.hpp"
#include "sne/trainer.hpp"

namespace {

namespace fs = std::filesystem;

sne::PatchMode mode_from_string(const std::string& s) {
  if (s == "aligned") return sne::PatchMode::Aligned;
  if (s == "overlapping") return sne::PatchMode::Overlapping;
  throw sne::ConfigError("unknown patch mode: " + s);
}

std::vector<std::string> list_pnm_files(const std::string& dir) {
  std::vector<std::string> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file()) continue;
    const std::string ext = entry.path().extension().string();
    if (ext == ".pgm" || ext == ".ppm") files.push_back(entry.path().string());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw sne::IoError("no .pgm/.ppm files in " + dir);
  return files;
}

std::vector<sne::CorpusItem> load_corpus(const std::string& dir, const sne::QuantTable& table,
                                         sne::PatchMode mode) {
  std::vector<sne::CorpusItem> items;
  for (const std::string& path : list_pnm_files(dir)) {
    sne::CorpusItem item;
    item.image = sne::load_pnm(path);
    item.rep = sne::encode_image(item.image, table, mode);
    items.push_back(std::move(item));
  }
  return items;
}

int run_encode(const std::string& input, const std::string& output, double quality, int edge,
               const std::string& mode) {
  const sne::ImageBuffer img = sne::load_pnm(input);
  const sne::QuantTable table = sne::QuantTable::luminance(edge, quality);
  const sne::QuantizedRepresentation rep =
      sne::encode_image(img, table, mode_from_string(mode));
  sne::save_sneq(rep, output);
  std::printf("encoded %s: %dx%dx%d, %d x %d blocks, bpp=%.4f\n", input.c_str(), rep.height,
              rep.width, rep.channels, rep.grid_rows, rep.grid_cols, rep.bpp_estimate);
  return 0;
}

int run_decode_baseline(const std::string& input, const std::string& output) {
  sne::save_pnm(sne::baseline_decode(sne::load_sneq(input)), output);
  return 0;
}

int run_train(const std::string& config_path, long seed_override, const std::string& out_path,
              const std::string& log_path) {
  const sne::KeyValueConfig cfg = sne::KeyValueConfig::parse_file(config_path);

  sne::TrainConfig tc;
  sne::TrainSchedule& s = tc.schedule;
  s.total_epochs = static_cast<int>(cfg.get_int("total_epochs", s.total_epochs));
  s.switch_epoch = static_cast<int>(cfg.get_int("switch_epoch", s.switch_epoch));
  s.reg_period = static_cast<int>(cfg.get_int("reg_period", s.reg_period));
  s.k_reg = static_cast<int>(cfg.get_int("k_reg", s.k_reg));
  s.k_plain = static_cast<int>(cfg.get_int("k_plain", s.k_plain));
  s.alpha = cfg.get_double("alpha", s.alpha);
  s.mu = cfg.get_double("mu", s.mu);
  s.sigma2_0 = cfg.get_double("sigma2_0", s.sigma2_0);
  s.lr0 = cfg.get_double("lr0", s.lr0);
  s.lr_sgd = cfg.get_double("lr_sgd", s.lr0 / 10.0);
  s.clip = cfg.get_double("clip", s.clip);
  s.batch = static_cast<int>(cfg.get_int("batch", s.batch));
  s.reg_comm_uses_err_matrix =
      cfg.get_bool("reg_comm_uses_err_matrix", s.reg_comm_uses_err_matrix);

  sne::ModelShape& m = tc.shape;
  m.state_dim = static_cast<int>(cfg.get_int("state_dim", m.state_dim));
  m.patch_edge = static_cast<int>(cfg.get_int("patch_edge", m.patch_edge));
  m.tied_ctx = cfg.get_bool("tied_ctx", m.tied_ctx);
  m.cell = sne::cell_from_string(cfg.get_string("cell", "lstm"));
  m.skip = sne::skip_from_string(cfg.get_string("skip", "none"));

  if (cfg.has("source_offsets")) {
    tc.spec.source_offsets = sne::offsets_from_string(cfg.require_string("source_offsets"));
  }
  if (cfg.has("co_offsets")) {
    tc.spec.co_offsets = sne::offsets_from_string(cfg.require_string("co_offsets"));
  }
  m.n_ctx = static_cast<int>(tc.spec.source_offsets.size());

  tc.seed = cfg.get_u64("seed", 1);
  if (seed_override >= 0) tc.seed = static_cast<uint64_t>(seed_override);
  tc.threads = static_cast<int>(cfg.get_int("threads", 1));
  tc.val_decode_k = static_cast<int>(cfg.get_int("val_decode_k", s.k_plain));

  const double quality = cfg.get_double("quality", 1.0);
  const sne::PatchMode mode = mode_from_string(cfg.get_string("mode", "aligned"));
  const sne::QuantTable table = sne::QuantTable::luminance(m.patch_edge, quality);

  const std::vector<sne::CorpusItem> train_set =
      load_corpus(cfg.require_string("train_dir"), table, mode);
  std::vector<sne::CorpusItem> val_set;
  if (cfg.has("val_dir")) val_set = load_corpus(cfg.require_string("val_dir"), table, mode);

  const sne::TrainResult result = sne::train(train_set, val_set, tc);

  sne::save_checkpoint(result.params, tc.spec, out_path);
  std::ofstream log(log_path, std::ios::trunc);
  if (!log) throw sne::IoError("cannot write " + log_path);
  log << sne::log_to_text(result.log);
  std::printf("trained %d epochs; checkpoint %s, log %s\n", s.total_epochs, out_path.c_str(),
              log_path.c_str());
  return 0;
}

int run_decode(const std::string& rep_path, const std::string& ckpt_path,
               const std::string& output, int k) {
  const sne::QuantizedRepresentation rep = sne::load_sneq(rep_path);
  const sne::Checkpoint ckpt = sne::load_checkpoint(ckpt_path);
  sne::save_pnm(sne::decode_image(rep, ckpt.params, ckpt.spec, k), output);
  return 0;
}

int run_eval(const std::string& a_path, const std::string& b_path, const std::string& rep_path) {
  const sne::ImageBuffer a = sne::load_pnm(a_path);
  const sne::ImageBuffer b = sne::load_pnm(b_path);
  sne::MetricReport report;
  report.psnr = sne::psnr(a, b);
  report.ssim = sne::ssim(a, b);
  // Small images fall back to however many dyadic scales fit.
  const int scales = std::min(sne::ms_ssim_max_scales(a), sne::ms_ssim_max_scales(b));
  report.ms_ssim = sne::ms_ssim(a, b, std::max(1, scales));
  std::printf("psnr=%.6f\n", report.psnr);
  std::printf("ssim=%.6f\n", report.ssim);
  std::printf("ms_ssim=%.6f\n", report.ms_ssim);
  if (!rep_path.empty()) {
    std::printf("bpp=%.6f\n", sne::load_sneq(rep_path).bpp_estimate);
  }
  return 0;
}

int run_sweep_k(const std::string& rep_path, const std::string& ckpt_path,
                const std::string& ref_path, const std::string& k_list) {
  const sne::QuantizedRepresentation rep = sne::load_sneq(rep_path);
  const sne::Checkpoint ckpt = sne::load_checkpoint(ckpt_path);
  const sne::ImageBuffer reference = sne::load_pnm(ref_path);
  std::vector<int> ks;
  std::string token;
  std::istringstream in(k_list);
  while (std::getline(in, token, ',')) {
    if (!token.empty()) ks.push_back(std::stoi(token));
  }
  const sne::KSweepReport report = sne::ksweep(rep, ckpt.params, ckpt.spec, ks, reference);
  std::printf("%s", sne::render_ksweep(report).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sibling neural estimator toolkit"};
  app.require_subcommand(1);

  std::string input, output, rep_path, ckpt_path, ref_path, config_path, log_path;
  std::string mode = "aligned";
  std::string k_list = "1,2,3,4,5,6";
  double quality = 1.0;
  int edge = 8;
  int k = 2;
  long seed_override = -1;

  auto* encode = app.add_subcommand("encode", "Image -> SNEQ1 quantized representation");
  encode->add_option("--input", input)->required();
  encode->add_option("--output", output)->required();
  encode->add_option("--quality", quality, "quality in (0,1]");
  encode->add_option("--block-edge", edge);
  encode->add_option("--mode", mode, "aligned|overlapping");

  auto* baseline = app.add_subcommand("decode-baseline", "SNEQ1 -> image, no learning");
  baseline->add_option("--input", input)->required();
  baseline->add_option("--output", output)->required();

  auto* train = app.add_subcommand("train", "Run config -> checkpoint + epoch log");
  train->add_option("--config", config_path)->required();
  train->add_option("--seed", seed_override, "overrides the config seed");
  train->add_option("--out", output)->required();
  train->add_option("--log", log_path)->required();

  auto* decode = app.add_subcommand("decode", "SNEQ1 + checkpoint -> image");
  decode->add_option("--rep", rep_path)->required();
  decode->add_option("--checkpoint", ckpt_path)->required();
  decode->add_option("--output", output)->required();
  decode->add_option("--K", k, "refinement steps per patch");

  auto* eval = app.add_subcommand("eval", "Two images -> metric report");
  eval->add_option("a", input)->required();
  eval->add_option("b", output)->required();
  eval->add_option("--rep", rep_path, "include bpp from this SNEQ1 file");

  auto* sweep = app.add_subcommand("sweep-k", "PSNR as a function of K, one checkpoint");
  sweep->add_option("--rep", rep_path)->required();
  sweep->add_option("--checkpoint", ckpt_path)->required();
  sweep->add_option("--reference", ref_path)->required();
  sweep->add_option("--K-values", k_list, "comma separated, strictly increasing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << e.what() << "\n" << app.help() << std::flush;
    return 2;
  }

  try {
    if (encode->parsed()) return run_encode(input, output, quality, edge, mode);
    if (baseline->parsed()) return run_decode_baseline(input, output);
    if (train->parsed()) return run_train(config_path, seed_override, output, log_path);
    if (decode->parsed()) return run_decode(rep_path, ckpt_path, output, k);
    if (eval->parsed()) return run_eval(input, output, rep_path);
    if (sweep->parsed()) return run_sweep_k(rep_path, ckpt_path, ref_path, k_list);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 2;
}
