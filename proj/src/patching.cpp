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

#include "sne/patching.hpp"

#include <algorithm>
#include <set>

namespace sne {

ContextSpec ContextSpec::defaults() {
  ContextSpec spec;
  spec.source_offsets = {{-1, -1}, {-1, 0}, {-1, 1}, {0, -1}};
  spec.co_offsets = {{-2, -2}, {-2, 0}, {-2, 2}, {0, -2}};
  return spec;
}

void ContextSpec::validate() const {
  if (source_offsets.empty() || co_offsets.empty()) {
    throw ParamError("context offset sets must be non-empty");
  }
  if (source_offsets.size() != co_offsets.size()) {
    throw ParamError("both context sets must have the same block count");
  }
  std::set<std::pair<int, int>> seen;
  for (const auto& o : source_offsets) {
    if (o == std::pair<int, int>{0, 0}) throw ParamError("target offset (0,0) is not a context");
    if (!seen.insert(o).second) throw ParamError("duplicate context offset");
  }
  for (const auto& o : co_offsets) {
    if (o == std::pair<int, int>{0, 0}) throw ParamError("target offset (0,0) is not a context");
    if (!seen.insert(o).second) {
      throw ParamError("source and co-estimator context offsets must be disjoint");
    }
  }
}

std::vector<int> scan_order(int grid_rows, int grid_cols) {
  if (grid_rows <= 0 || grid_cols <= 0) throw GeometryError("grid dimensions must be positive");
  std::vector<int> scan;
  scan.reserve(static_cast<size_t>(grid_rows) * grid_cols);
  // Interior: every patch whose eight neighbors are all on the grid.
  for (int r = 1; r + 1 < grid_rows; ++r)
    for (int c = 1; c + 1 < grid_cols; ++c) scan.push_back(r * grid_cols + c);
  // Border ring, clockwise from the top-left corner.
  for (int c = 0; c < grid_cols; ++c) scan.push_back(c);
  for (int r = 1; r < grid_rows; ++r) scan.push_back(r * grid_cols + grid_cols - 1);
  if (grid_rows > 1) {
    for (int c = grid_cols - 2; c >= 0; --c) scan.push_back((grid_rows - 1) * grid_cols + c);
  }
  if (grid_cols > 1) {
    for (int r = grid_rows - 2; r >= 1; --r) scan.push_back(r * grid_cols);
  }
  return scan;
}

PatchGrid build_grid(const ImageBuffer& img, int patch_edge, PatchMode mode, int channel) {
  PatchGrid grid;
  grid.patch_edge = patch_edge;
  grid.mode = mode;
  grid.grid_rows = grid_extent(img.height, patch_edge, mode);
  grid.grid_cols = grid_extent(img.width, patch_edge, mode);
  grid.targets.reserve(grid.patch_count());
  for (int gr = 0; gr < grid.grid_rows; ++gr) {
    for (int gc = 0; gc < grid.grid_cols; ++gc) {
      const int y0 = patch_origin(gr, patch_edge, mode);
      const int x0 = patch_origin(gc, patch_edge, mode);
      Tensor2 t(1, patch_edge * patch_edge);
      for (int y = 0; y < patch_edge; ++y)
        for (int x = 0; x < patch_edge; ++x)
          t.at(0, y * patch_edge + x) = img.at(y0 + y, x0 + x, channel);
      grid.targets.push_back(std::move(t));
    }
  }
  grid.scan = scan_order(grid.grid_rows, grid.grid_cols);
  return grid;
}

namespace {

ContextBlocks gather(const PatchGrid& grid, const QuantizedRepresentation& rep, int tr, int tc,
                     const std::vector<std::pair<int, int>>& offsets, int channel) {
  const int edge = rep.table.block_edge;
  ContextBlocks out;
  out.blocks.reserve(offsets.size());
  out.ghost.reserve(offsets.size());
  for (const auto& [dr, dc] : offsets) {
    const int r = tr + dr;
    const int c = tc + dc;
    if (grid.in_grid(r, c)) {
      const int16_t* q = rep.block(channel, r * grid.grid_cols + c);
      Tensor2 b(1, edge * edge);
      for (int i = 0; i < edge * edge; ++i) b.at(0, i) = static_cast<double>(q[i]);
      out.blocks.push_back(std::move(b));
      out.ghost.push_back(false);
    } else {
      out.blocks.emplace_back(1, edge * edge);  // ghost: all zeros
      out.ghost.push_back(true);
    }
  }
  return out;
}

}  // namespace

std::pair<ContextBlocks, ContextBlocks> context_for(const PatchGrid& grid,
                                                    const QuantizedRepresentation& rep,
                                                    int target_idx, const ContextSpec& spec,
                                                    int channel) {
  if (target_idx < 0 || target_idx >= grid.patch_count()) {
    throw GeometryError("target index out of range");
  }
  if (grid.grid_rows != rep.grid_rows || grid.grid_cols != rep.grid_cols) {
    throw GeometryError("patch grid and representation grid disagree");
  }
  const int tr = target_idx / grid.grid_cols;
  const int tc = target_idx % grid.grid_cols;
  return {gather(grid, rep, tr, tc, spec.source_offsets, channel),
          gather(grid, rep, tr, tc, spec.co_offsets, channel)};
}

ImageBuffer assemble_patches(const std::vector<Tensor2>& patches, int grid_rows, int grid_cols,
                             int patch_edge, PatchMode mode) {
  if (static_cast<int>(patches.size()) != grid_rows * grid_cols) {
    throw GeometryError("patch count does not match grid");
  }
  const int stride = mode == PatchMode::Aligned ? patch_edge : patch_edge / 2;
  const int height = (grid_rows - 1) * stride + patch_edge;
  const int width = (grid_cols - 1) * stride + patch_edge;
  ImageBuffer img(height, width, 1);
  std::vector<double> weight(static_cast<size_t>(height) * width, 0.0);
  for (int gr = 0; gr < grid_rows; ++gr) {
    for (int gc = 0; gc < grid_cols; ++gc) {
      const Tensor2& p = patches[gr * grid_cols + gc];
      const int y0 = patch_origin(gr, patch_edge, mode);
      const int x0 = patch_origin(gc, patch_edge, mode);
      for (int y = 0; y < patch_edge; ++y) {
        for (int x = 0; x < patch_edge; ++x) {
          img.at(y0 + y, x0 + x) += p.at(0, y * patch_edge + x);
          weight[static_cast<size_t>(y0 + y) * width + x0 + x] += 1.0;
        }
      }
    }
  }
  for (size_t i = 0; i < img.pix.size(); ++i) {
    img.pix[i] = clamp01(weight[i] > 0.0 ? img.pix[i] / weight[i] : 0.0);
  }
  return img;
}

}  // namespace sne
