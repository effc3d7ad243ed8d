// Copyright 2026 The semfuse Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Threshold-cluster proposals over a fused grid whose leading channels hold
// per-category evidence, plus the fixed weights that produce such a grid.
// This is a baseline for exercising evaluation end to end, not a detector.

#pragma once

#include <cmath>
#include <vector>

#include "semfuse/bev_fuse.hpp"
#include "semfuse/bev_grid.hpp"
#include "semfuse/common.hpp"
#include "semfuse/eval.hpp"
#include "semfuse/masks.hpp"

namespace semfuse
{

struct ProposalConfig
{
  int first_channel = 0;
  int n_categories = 10;
  double threshold = 2.0;
  int min_cells = 2;
  /// Box size (w, l, h) per category.
  std::vector<Vec3> sizes;
  /// The evidence centroid sits on the faces seen from the ego; push the
  /// center outwards by this fraction of the template's smaller footprint side.
  double push_out = 0.5;
  /// Score = mass / (mass + score_scale).
  double score_scale = 20.0;

  void validate(const BevGrid & g) const
  {
    require(n_categories >= 1, "proposals need at least one category");
    require(first_channel >= 0 && first_channel + n_categories <= g.channels(), "category channels exceed the grid");
    require(std::isfinite(threshold), "proposal threshold must be finite");
    require(min_cells >= 1, "min_cells must be positive");
    require(sizes.size() == static_cast<std::size_t>(n_categories), "one template size per category is required");
    require(score_scale > 0.0, "score scale must be positive");
  }
};

/// Cells whose strongest category channel exceeds the threshold are labeled
/// with that category (ties to the lower index); 8-connected cells of equal
/// label form one proposal.
inline std::vector<Box3D> propose(const BevGrid & g, const ProposalConfig & cfg)
{
  cfg.validate(g);
  const int rows = g.rows();
  const int cols = g.cols();
  const std::size_t n_cells = g.cells();
  std::vector<int> label(n_cells, -1);
  for (std::size_t cell = 0; cell < n_cells; ++cell) {
    int best = -1;
    double best_v = cfg.threshold;
    for (int k = 0; k < cfg.n_categories; ++k) {
      const double v = g.at(cfg.first_channel + k, cell);
      if (v > best_v) {
        best_v = v;
        best = k;
      }
    }
    label[cell] = best;
  }

  std::vector<Box3D> out;
  std::vector<char> seen(n_cells, 0);
  std::vector<std::size_t> stack;
  for (std::size_t start = 0; start < n_cells; ++start) {
    if (label[start] < 0 || seen[start]) {
      continue;
    }
    const int cat = label[start];
    double mass = 0.0, sx = 0.0, sy = 0.0;
    int n = 0;
    stack.assign(1, start);
    seen[start] = 1;
    while (!stack.empty()) {
      const std::size_t cell = stack.back();
      stack.pop_back();
      const double v = g.at(cfg.first_channel + cat, cell);
      const int r = static_cast<int>(cell / cols);
      const int q = static_cast<int>(cell % cols);
      const auto [cx, cy] = g.spec.cell_center(r, q);
      mass += v;
      sx += v * cx;
      sy += v * cy;
      ++n;
      for (int dr = -1; dr <= 1; ++dr) {
        for (int dq = -1; dq <= 1; ++dq) {
          const int rr = r + dr;
          const int qq = q + dq;
          if (rr < 0 || rr >= rows || qq < 0 || qq >= cols) {
            continue;
          }
          const std::size_t nb = static_cast<std::size_t>(rr) * cols + qq;
          if (!seen[nb] && label[nb] == cat) {
            seen[nb] = 1;
            stack.push_back(nb);
          }
        }
      }
    }
    if (n < cfg.min_cells || mass <= 0.0) {
      continue;
    }
    const Vec3 & size = cfg.sizes[cat];
    Eigen::Vector2d center(sx / mass, sy / mass);
    if (const double r = center.norm(); r > 0.0) {
      center += center / r * (cfg.push_out * 0.5 * std::min(size.x(), size.y()));
    }
    Box3D b;
    b.category = cat;
    b.center = Vec3(center.x(), center.y(), size.z() / 2.0);
    b.size = size;
    b.yaw = 0.0;
    b.score = mass / (mass + cfg.score_scale);
    out.push_back(b);
  }
  return out;
}

/// Combiner that adds `gain` to channel k on pixels of category k.
inline SemanticCombiner category_combiner(int out_channels, int n_categories, double gain)
{
  require(out_channels >= n_categories, "combiner needs one output channel per category");
  SemanticCombiner c = SemanticCombiner::zeros(out_channels, n_categories);
  for (int k = 0; k < n_categories; ++k) {
    c.weights[static_cast<std::size_t>(k) * (n_categories + 1) + k] = gain;
  }
  return c;
}

/// Index of the first category-histogram channel in a pillar layout.
inline int histogram_offset(const PillarSpec & spec)
{
  int offset = 0;
  for (auto ch : spec.layout) {
    if (ch == PillarChannel::kCategoryHistogram) {
      return offset;
    }
    ++offset;
  }
  throw ContractError("pillar layout has no category histogram");
}

/// 1x1 kernels mapping camera channel k and LiDAR histogram bin k onto
/// fused channel k.
struct EvidenceKernels
{
  ConvKernel camera;
  ConvKernel lidar;

  ConvKernel concat() const { return concat_input_kernels(camera, lidar); }
};

inline EvidenceKernels evidence_kernels(int cam_channels, const PillarSpec & pillar, int n_categories, double cam_gain, double lidar_gain)
{
  require(cam_channels >= n_categories, "camera stream needs one channel per category");
  const int lidar_channels = pillar.channel_count(n_categories);
  const int hist = histogram_offset(pillar);
  EvidenceKernels k{ConvKernel::zeros(n_categories, cam_channels, 1), ConvKernel::zeros(n_categories, lidar_channels, 1)};
  for (int c = 0; c < n_categories; ++c) {
    k.camera.w(c, c, 0, 0) = cam_gain;
    k.lidar.w(c, hist + c, 0, 0) = lidar_gain;
  }
  return k;
}

}  // namespace semfuse
