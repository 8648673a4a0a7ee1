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

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include "doctest.h"
#include "sne/checkpoint.hpp"
#include "sne/codec.hpp"
#include "sne/config.hpp"
#include "sne/wire.hpp"
#include "support/corpus.hpp"

namespace fs = std::filesystem;

namespace {

struct CommandResult {
  int exit_code;
  std::string output;
};

// Runs the CLI binary and captures combined stdout/stderr.
CommandResult run_cli(const std::string& args) {
  const std::string out_file = (fs::temp_directory_path() / "sne_cli_out.txt").string();
  const std::string cmd = std::string(SNE_CLI_PATH) + " " + args + " > " + out_file + " 2>&1";
  const int raw = std::system(cmd.c_str());
  std::ifstream f(out_file);
  std::string output((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return {WEXITSTATUS(raw), output};
}

fs::path make_workdir(const char* name) {
  const fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string tiny_train_config(const fs::path& dir, int extent) {
  const fs::path train_dir = dir / "train";
  const fs::path val_dir = dir / "val";
  fs::create_directories(train_dir);
  fs::create_directories(val_dir);
  for (int i = 0; i < 3; ++i) {
    char name[32];
    std::snprintf(name, sizeof(name), "img_%d.pgm", i);
    sne::save_pnm(test_support::desk_image(i, extent),
                  ((i < 2 ? train_dir : val_dir) / name).string());
  }
  const fs::path cfg_path = dir / "run.cfg";
  std::ofstream cfg(cfg_path);
  cfg << "total_epochs = 3\n"
      << "switch_epoch = 2\n"
      << "state_dim = 8\n"
      << "patch_edge = 8\n"
      << "quality = 0.5\n"
      << "batch = 16\n"
      << "train_dir = " << train_dir.string() << "\n"
      << "val_dir = " << val_dir.string() << "\n"
      << "seed = 5\n";
  return cfg_path.string();
}

}  // namespace

TEST_CASE("encode then baseline-decode round trips through SNEQ1 files") {
  const fs::path dir = make_workdir("sne_cli_encode");
  const std::string img_path = (dir / "in.pgm").string();
  sne::save_pnm(test_support::desk_image(0), img_path);

  const std::string rep_path = (dir / "in.sneq").string();
  CommandResult r = run_cli("encode --input " + img_path + " --output " + rep_path +
                            " --quality 0.5");
  CHECK(r.exit_code == 0);

  const sne::QuantizedRepresentation rep = sne::load_sneq(rep_path);
  CHECK(rep.grid_rows == 8);

  const std::string out_path = (dir / "baseline.pgm").string();
  r = run_cli("decode-baseline --input " + rep_path + " --output " + out_path);
  CHECK(r.exit_code == 0);

  CommandResult eval = run_cli("eval " + img_path + " " + out_path + " --rep " + rep_path);
  CHECK(eval.exit_code == 0);
  CHECK(eval.output.find("psnr=") != std::string::npos);
  CHECK(eval.output.find("bpp=") != std::string::npos);
}

TEST_CASE("eval of identical images reports the capped psnr and unit ssim") {
  const fs::path dir = make_workdir("sne_cli_eval");
  const std::string img_path = (dir / "a.pgm").string();
  sne::save_pnm(test_support::desk_image(1), img_path);
  const CommandResult r = run_cli("eval " + img_path + " " + img_path);
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("psnr=99.000000") != std::string::npos);
  CHECK(r.output.find("ssim=1.000000") != std::string::npos);
  CHECK(r.output.find("ms_ssim=1.000000") != std::string::npos);
}

TEST_CASE("unknown flags exit 2 with usage text") {
  const CommandResult r = run_cli("decode --no-such-flag");
  CHECK(r.exit_code == 2);
  CHECK(r.output.find("Usage") != std::string::npos);
}

TEST_CASE("missing subcommand exits 2; missing file exits 1") {
  CHECK(run_cli("").exit_code == 2);
  const CommandResult r = run_cli("decode-baseline --input /nonexistent.sneq --output /tmp/x.pgm");
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("train twice with the same seed produces identical bytes") {
  const fs::path dir = make_workdir("sne_cli_train");
  const std::string cfg = tiny_train_config(dir, 16);

  const std::string ck1 = (dir / "m1.snec").string();
  const std::string ck2 = (dir / "m2.snec").string();
  const std::string log1 = (dir / "l1.csv").string();
  const std::string log2 = (dir / "l2.csv").string();

  CHECK(run_cli("train --config " + cfg + " --seed 7 --out " + ck1 + " --log " + log1)
            .exit_code == 0);
  CHECK(run_cli("train --config " + cfg + " --seed 7 --out " + ck2 + " --log " + log2)
            .exit_code == 0);
  CHECK(sne::wire::read_file(ck1) == sne::wire::read_file(ck2));
  CHECK(sne::wire::read_file(log1) == sne::wire::read_file(log2));

  // A different seed must change the checkpoint.
  const std::string ck3 = (dir / "m3.snec").string();
  CHECK(run_cli("train --config " + cfg + " --seed 8 --out " + ck3 + " --log " +
                (dir / "l3.csv").string())
            .exit_code == 0);
  CHECK(sne::wire::read_file(ck1) != sne::wire::read_file(ck3));
}

TEST_CASE("decode drives the learned pipeline end to end") {
  const fs::path dir = make_workdir("sne_cli_decode");
  const std::string cfg = tiny_train_config(dir, 16);
  const std::string ckpt = (dir / "model.snec").string();
  REQUIRE(run_cli("train --config " + cfg + " --out " + ckpt + " --log " +
                  (dir / "log.csv").string())
              .exit_code == 0);

  const std::string img_path = (dir / "train/img_0.pgm").string();
  const std::string rep_path = (dir / "img0.sneq").string();
  REQUIRE(run_cli("encode --input " + img_path + " --output " + rep_path + " --quality 0.5")
              .exit_code == 0);

  const std::string out_path = (dir / "decoded.pgm").string();
  CHECK(run_cli("decode --rep " + rep_path + " --checkpoint " + ckpt + " --output " + out_path +
                " --K 2")
            .exit_code == 0);
  const sne::ImageBuffer decoded = sne::load_pnm(out_path);
  CHECK(decoded.height == 16);
  CHECK(decoded.width == 16);

  // Checkpoint without source tensors is a data error (exit 1).
  std::vector<uint8_t> bytes = sne::wire::read_file(ckpt);
  const std::string needle = "dec.u";
  for (size_t i = 0; i + needle.size() <= bytes.size(); ++i) {
    if (std::equal(needle.begin(), needle.end(), bytes.begin() + i) &&
        bytes[i - 2] == needle.size()) {
      bytes[i] = 'x';
      break;
    }
  }
  const std::string broken = (dir / "broken.snec").string();
  sne::wire::write_file(broken, bytes);
  const CommandResult r = run_cli("decode --rep " + rep_path + " --checkpoint " + broken +
                                  " --output " + out_path);
  CHECK(r.exit_code == 1);
  CHECK(r.output.find("missing source tensor") != std::string::npos);
}

TEST_CASE("sweep-k renders a table shaped like the K protocol") {
  const fs::path dir = make_workdir("sne_cli_sweep");
  const std::string cfg = tiny_train_config(dir, 16);
  const std::string ckpt = (dir / "model.snec").string();
  REQUIRE(run_cli("train --config " + cfg + " --out " + ckpt + " --log " +
                  (dir / "log.csv").string())
              .exit_code == 0);
  const std::string img_path = (dir / "train/img_0.pgm").string();
  const std::string rep_path = (dir / "img0.sneq").string();
  REQUIRE(run_cli("encode --input " + img_path + " --output " + rep_path + " --quality 0.5")
              .exit_code == 0);

  const CommandResult r = run_cli("sweep-k --rep " + rep_path + " --checkpoint " + ckpt +
                                  " --reference " + img_path + " --K-values 1,2,3");
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("K = 1") != std::string::npos);
  CHECK(r.output.find("K = 3") != std::string::npos);
  CHECK(r.output.find("PSNR") != std::string::npos);
  CHECK(r.output.find("bpp =") != std::string::npos);
}
