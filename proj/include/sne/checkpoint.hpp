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

#include "sne/estimator.hpp"
#include "sne/patching.hpp"

namespace sne {

// SNEC1 checkpoint: versioned container of named 64-bit tensors plus the
// model geometry and context offsets needed to decode. Co-estimator tensors
// are optional; a checkpoint without them still decodes identically.
struct Checkpoint {
  SneParams params;
  ContextSpec spec;
};

std::vector<uint8_t> encode_checkpoint(const SneParams& params, const ContextSpec& spec);
Checkpoint decode_checkpoint(const std::vector<uint8_t>& bytes);

void save_checkpoint(const SneParams& params, const ContextSpec& spec, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// Drops the co-estimator tensors (ctx_co.*, lstm_co/elman_co.*, w_err,
// skip_co.*) from a serialized checkpoint.
std::vector<uint8_t> strip_co_estimator(const std::vector<uint8_t>& bytes);

}  // namespace sne
