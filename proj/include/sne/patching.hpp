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

#include <utility>
#include <vector>

#include "sne/codec.hpp"
#include "sne/image.hpp"
#include "sne/tensor.hpp"

namespace sne {

// Which neighbor positions feed each sibling. Offsets are (d_row, d_col)
// relative to the target patch; positions that fall off the grid resolve to
// all-zero ghost patches. The target's own position never appears in either
// set, and the two sets never overlap.
struct ContextSpec {
  std::vector<std::pair<int, int>> source_offsets;
  std::vector<std::pair<int, int>> co_offsets;

  // Near causal ring for the source estimator, distance-2 ring for the
  // co-estimator, four offsets each.
  static ContextSpec defaults();
  void validate() const;
};

// Target patches of one image channel in grid layout plus the order the
// estimator visits them in. Immutable after construction.
struct PatchGrid {
  int grid_rows = 0;
  int grid_cols = 0;
  int patch_edge = 0;
  PatchMode mode = PatchMode::Aligned;
  std::vector<Tensor2> targets;  // patch index (row-major) -> 1 x edge^2 pixels
  std::vector<int> scan;         // scan[i] = patch index visited i-th

  int patch_count() const { return grid_rows * grid_cols; }
  bool in_grid(int r, int c) const {
    return r >= 0 && r < grid_rows && c >= 0 && c < grid_cols;
  }
};

// Interior patches (all eight raster neighbors present) first in row-major
// order, then border patches clockwise around the perimeter from (0,0).
std::vector<int> scan_order(int grid_rows, int grid_cols);

PatchGrid build_grid(const ImageBuffer& img, int patch_edge, PatchMode mode, int channel = 0);

// Quantized coefficient blocks at target+offset positions, flattened to
// 1 x edge^2 rows; `ghost[i]` marks offsets that fell off the grid and were
// substituted with zeros.
struct ContextBlocks {
  std::vector<Tensor2> blocks;
  std::vector<bool> ghost;
};

std::pair<ContextBlocks, ContextBlocks> context_for(const PatchGrid& grid,
                                                    const QuantizedRepresentation& rep,
                                                    int target_idx, const ContextSpec& spec,
                                                    int channel = 0);

// Places per-patch pixel rows (1 x edge^2) back into an image channel;
// overlapping contributions are averaged. Values are clamped to [0,1].
ImageBuffer assemble_patches(const std::vector<Tensor2>& patches, int grid_rows, int grid_cols,
                             int patch_edge, PatchMode mode);

}  // namespace sne
