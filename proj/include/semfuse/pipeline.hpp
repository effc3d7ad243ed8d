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

// End-to-end fusion over in-memory inputs:
//   LiDAR:  paint -> pillarize
//   camera: embed -> lift -> attend -> mask -> pool
//   fuse
// Every stage is a plain call into the module headers; the only state kept
// here is what the report and the stage dumps need.

#pragma once

#include <chrono>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "semfuse/bev_fuse.hpp"
#include "semfuse/bev_grid.hpp"
#include "semfuse/common.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/masks.hpp"
#include "semfuse/paint.hpp"
#include "semfuse/view_transform.hpp"

namespace semfuse
{

enum class ViewMode { kMapping, kAttention, kAttentionSemanticMask, kAttentionDepthMask };
enum class FuserKind { kConcatConv, kAdditive };

inline std::string_view to_string(ViewMode m)
{
  switch (m) {
    case ViewMode::kMapping: return "mapping";
    case ViewMode::kAttention: return "attention";
    case ViewMode::kAttentionSemanticMask: return "attention+semantic_mask";
    case ViewMode::kAttentionDepthMask: return "attention+depth_mask";
  }
  return "?";
}

inline ViewMode parse_view_mode(std::string_view s)
{
  for (auto m : {ViewMode::kMapping, ViewMode::kAttention, ViewMode::kAttentionSemanticMask, ViewMode::kAttentionDepthMask}) {
    if (s == to_string(m)) {
      return m;
    }
  }
  throw ParseError("unknown view-transform mode '" + std::string(s) + "'");
}

inline std::string_view to_string(FuserKind f) { return f == FuserKind::kConcatConv ? "concat_conv" : "additive"; }

inline FuserKind parse_fuser(std::string_view s)
{
  if (s == "concat_conv") {
    return FuserKind::kConcatConv;
  }
  if (s == "additive") {
    return FuserKind::kAdditive;
  }
  throw ParseError("unknown fuser '" + std::string(s) + "'");
}

struct PipelineInputs
{
  std::vector<CameraModel> rig;
  std::vector<std::vector<InstanceMask>> masks;  // per camera
  std::vector<FeatureImage> features;            // per camera
  /// Per camera; empty means all-ones (which reproduces mapping).
  std::vector<DepthAttention> attention;
  std::vector<LidarPoint> cloud;
  int n_categories = 10;
  SemanticCombiner combiner;
  DepthBinning bins;
  BevExtent extent;
  int bev_rows = 180;
  int bev_cols = 180;
  PillarSpec pillar;
  ViewMode mode = ViewMode::kAttentionSemanticMask;
  FuserKind fuser = FuserKind::kConcatConv;
  ConvKernel kernel;        // concat_conv
  ConvKernel kernel_cam;    // additive
  ConvKernel kernel_lidar;  // additive
  double score_threshold = 0.0;
  double depth_threshold = 0.01;

  void validate() const
  {
    require(!rig.empty(), "the rig has no cameras");
    require(masks.size() == rig.size(), "need one mask list per camera");
    require(features.size() == rig.size(), "need one feature image per camera");
    require(attention.empty() || attention.size() == rig.size(), "need one depth attention per camera");
    require(n_categories >= 1, "at least one category is required");
    bins.validate();
    for (const auto & f : features) {
      require(f.channels == features.front().channels && f.width == features.front().width && f.height == features.front().height,
        "feature images must share shape across cameras");
    }
    require(combiner.out_channels == features.front().channels, "combiner width must equal the feature channels");
    require(combiner.n_categories == n_categories, "combiner category count differs from the pipeline");
    require(mode != ViewMode::kAttentionDepthMask || !attention.empty(), "depth-mask mode needs depth attention");
    for (std::size_t c = 0; c < rig.size(); ++c) {
      for (const auto & m : masks[c]) {
        require(m.width == rig[c].width() && m.height == rig[c].height(), "mask size differs from its camera image");
        require(m.category < n_categories, "mask category out of range");
      }
    }
    pillar.validate();
    require(pillar.extent == extent && pillar.rows == bev_rows && pillar.cols == bev_cols,
      "pillar grid must match the camera BEV grid");
  }
};

struct StageTiming
{
  std::string stage;
  double seconds = 0.0;
};

struct StageDumps
{
  std::optional<SemanticPointCloud> painted;
  std::optional<BevGrid> lidar_bev;
  std::optional<BevGrid> camera_bev;
  std::vector<SemanticImage> semantics;
};

struct PipelineResult
{
  BevGrid fused;
  std::vector<StageTiming> timings;
  std::size_t painted_points = 0;
  std::size_t pillar_dropped = 0;
  std::size_t points_lifted = 0;
  std::size_t points_after_mask = 0;
  std::size_t points_pooled = 0;
  std::size_t points_outside = 0;
  double foreground_fraction = 0.0;  // mean over cameras
  StageDumps dumps;

  double reduction() const
  {
    return points_lifted == 0 ? 0.0 : 1.0 - static_cast<double>(points_after_mask) / static_cast<double>(points_lifted);
  }

  double seconds(std::string_view stage) const
  {
    for (const auto & t : timings) {
      if (t.stage == stage) {
        return t.seconds;
      }
    }
    return 0.0;
  }
};

/// Contract violation raised inside a named stage.
class StageError : public ContractError
{
public:
  StageError(std::string stage, const std::string & what)
  : ContractError(stage + ": " + what), stage_(std::move(stage))
  {
  }
  const std::string & stage() const { return stage_; }

private:
  std::string stage_;
};

namespace detail
{

template <typename Fn>
auto timed(std::vector<StageTiming> & timings, const char * stage, Fn && fn) -> decltype(fn())
{
  const auto t0 = std::chrono::steady_clock::now();
  auto finish = [&] {
    timings.push_back({stage, std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count()});
  };
  try {
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      finish();
    } else {
      auto r = fn();
      finish();
      return r;
    }
  } catch (const StageError &) {
    throw;
  } catch (const ContractError & e) {
    throw StageError(stage, e.what());
  }
}

}  // namespace detail

inline PipelineResult run_pipeline(const PipelineInputs & in, bool keep_dumps = false)
{
  PipelineResult res;
  detail::timed(res.timings, "inputs", [&] { in.validate(); });
  res.timings.clear();
  auto & T = res.timings;
  const std::size_t n_cam = in.rig.size();

  // LiDAR stream.
  auto painted = detail::timed(T, "paint", [&] { return paint_points(in.cloud, in.rig, in.masks, in.n_categories); });
  res.painted_points = painted.painted_count();
  auto pillars = detail::timed(T, "pillarize", [&] { return pillarize(painted, in.pillar); });
  res.pillar_dropped = pillars.dropped;

  // Camera stream.
  const int fw = in.features.front().width;
  const int fh = in.features.front().height;
  std::vector<SemanticImage> sem(n_cam);
  std::vector<FeatureImage> embedded;
  detail::timed(T, "embed", [&] {
    for (std::size_t c = 0; c < n_cam; ++c) {
      sem[c] = downscale_masks(in.masks[c], fw, fh);
      embedded.push_back(embed_semantics(in.features[c], sem[c], in.combiner));
    }
  });
  for (const auto & s : sem) {
    res.foreground_fraction += s.foreground_fraction() / static_cast<double>(n_cam);
  }
  auto lifted = detail::timed(T, "lift", [&] {
    std::vector<PseudoPointSet> per_cam;
    for (std::size_t c = 0; c < n_cam; ++c) {
      per_cam.push_back(lift_mapping(embedded[c], in.rig[c], in.bins, static_cast<std::uint32_t>(c)));
    }
    return merge(per_cam);
  });
  res.points_lifted = lifted.size();
  if (in.mode != ViewMode::kMapping) {
    lifted = detail::timed(T, "attend", [&] {
      return in.attention.empty() ? lifted : apply_depth_attention(lifted, std::span<const DepthAttention>(in.attention));
    });
  }
  if (in.mode == ViewMode::kAttentionSemanticMask) {
    lifted = detail::timed(T, "mask", [&] { return semantic_mask_filter(lifted, std::span<const SemanticImage>(sem), in.score_threshold); });
  } else if (in.mode == ViewMode::kAttentionDepthMask) {
    lifted = detail::timed(T, "mask", [&] { return depth_threshold_filter(lifted, std::span<const DepthAttention>(in.attention), in.depth_threshold); });
  }
  res.points_after_mask = lifted.size();
  const BevSpec cam_spec{in.extent, in.bev_rows, in.bev_cols, in.features.front().channels};
  auto pooled = detail::timed(T, "pool", [&] { return splat_pool(lifted, cam_spec); });
  res.points_pooled = pooled.pooled;
  res.points_outside = pooled.dropped;

  res.fused = detail::timed(T, "fuse", [&] {
    return in.fuser == FuserKind::kConcatConv ? fuse_concat_conv(pooled.grid, pillars.grid, in.kernel)
                                              : fuse_additive(pooled.grid, pillars.grid, in.kernel_cam, in.kernel_lidar);
  });

  if (keep_dumps) {
    res.dumps.painted = std::move(painted);
    res.dumps.lidar_bev = std::move(pillars.grid);
    res.dumps.camera_bev = std::move(pooled.grid);
    res.dumps.semantics = std::move(sem);
  }
  return res;
}

}  // namespace semfuse
