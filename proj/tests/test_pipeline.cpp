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

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "oracles.hpp"
#include "semfuse/io.hpp"
#include "semfuse/pipeline.hpp"
#include "semfuse/proposals.hpp"
#include "semfuse/scene_io.hpp"

namespace
{

using semfuse::FuserKind;
using semfuse::ViewMode;

/// Small synthetic run: 16 feature channels and 24 depth bins keep each
/// pipeline call well under a second.
struct SmallRun
{
  semfuse::SceneConfig cfg;
  semfuse::Scene scene;
  semfuse::io::RunConfig rc;

  explicit SmallRun(std::uint64_t seed, double mask_noise = 0.0)
  {
    cfg.seed = seed;
    cfg.feature_channels = 16;
    cfg.mask_noise = mask_noise;
    scene = semfuse::synthesize(cfg);
    semfuse::io::SceneDefaults d;
    d.bins = semfuse::DepthBinning{1.0, 2.0, 24};
    rc = semfuse::io::scene_run_config(scene, cfg, d);
  }
};

std::vector<char> fused_bytes(const semfuse::PipelineInputs & in) { return semfuse::io::encode_bev(semfuse::run_pipeline(in).fused); }

TEST(Pipeline, MappingEqualsAllOnesAttention)
{
  SmallRun s(21);
  auto in = s.rc.inputs;
  in.mode = ViewMode::kMapping;
  const auto mapping = semfuse::run_pipeline(in).fused;

  in.mode = ViewMode::kAttention;
  in.attention.clear();
  for (const auto & f : in.features) {
    in.attention.push_back(semfuse::DepthAttention::ones(f.width, f.height, in.bins.count));
  }
  const auto ones = semfuse::run_pipeline(in).fused;
  EXPECT_EQ(ones.data, mapping.data);

  in.attention.clear();
  EXPECT_EQ(semfuse::run_pipeline(in).fused.data, mapping.data);
}

TEST(Pipeline, AttentionChangesTheGrid)
{
  SmallRun s(22);
  auto in = s.rc.inputs;
  in.mode = ViewMode::kMapping;
  const auto mapping = semfuse::run_pipeline(in).fused;
  in.mode = ViewMode::kAttention;
  EXPECT_NE(semfuse::run_pipeline(in).fused.data, mapping.data);
}

TEST(Pipeline, MaskedReductionIsForegroundComplement)
{
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    SmallRun s(seed, seed == 3 ? 0.3 : 0.0);
    auto in = s.rc.inputs;
    in.mode = ViewMode::kAttentionSemanticMask;
    const auto r = semfuse::run_pipeline(in);
    EXPECT_NEAR(r.reduction(), 1.0 - r.foreground_fraction, 1e-12);

    // Independent census on the feature grid.
    const int fw = in.features.front().width;
    const int fh = in.features.front().height;
    std::size_t fg = 0;
    for (const auto & masks : in.masks) {
      const auto sem = oracle::downscale(masks, fw, fh);
      for (int c : sem.category) fg += c >= 0;
    }
    const std::size_t per_pixel = static_cast<std::size_t>(in.bins.count);
    EXPECT_EQ(r.points_lifted, in.rig.size() * static_cast<std::size_t>(fw * fh) * per_pixel);
    EXPECT_EQ(r.points_after_mask, fg * per_pixel);
  }
}

TEST(Pipeline, AdditiveIdentityIsStreamSum)
{
  SmallRun s(23);
  auto in = s.rc.inputs;
  in.fuser = FuserKind::kAdditive;
  const int cam = in.features.front().channels;
  const int lidar = in.pillar.channel_count(in.n_categories);
  const int out = std::max(cam, lidar);
  in.kernel_cam = semfuse::ConvKernel::zeros(out, cam, 1);
  in.kernel_lidar = semfuse::ConvKernel::zeros(out, lidar, 1);
  for (int c = 0; c < cam; ++c) in.kernel_cam.w(c, c, 0, 0) = 1.0;
  for (int c = 0; c < lidar; ++c) in.kernel_lidar.w(c, c, 0, 0) = 1.0;
  const auto r = semfuse::run_pipeline(in, true);
  const auto & a = *r.dumps.camera_bev;
  const auto & b = *r.dumps.lidar_bev;
  ASSERT_EQ(r.fused.channels(), out);
  for (int c = 0; c < out; ++c) {
    for (std::size_t cell = 0; cell < r.fused.cells(); ++cell) {
      const double want = (c < cam ? a.at(c, cell) : 0.0) + (c < lidar ? b.at(c, cell) : 0.0);
      ASSERT_NEAR(r.fused.at(c, cell), want, 1e-9 * (1.0 + std::abs(want)));
    }
  }
}

TEST(Pipeline, ConcatEqualsAdditiveForSplitKernels)
{
  SmallRun s(24);
  auto in = s.rc.inputs;
  in.fuser = FuserKind::kConcatConv;
  const auto concat = semfuse::run_pipeline(in).fused;
  in.fuser = FuserKind::kAdditive;
  const auto additive = semfuse::run_pipeline(in).fused;
  ASSERT_TRUE(concat.same_layout(additive));
  for (std::size_t i = 0; i < concat.data.size(); ++i) {
    ASSERT_NEAR(concat.data[i], additive.data[i], 1e-9 * (1.0 + std::abs(concat.data[i])));
  }
}

TEST(Pipeline, StreamDumpsMatchStandaloneStages)
{
  SmallRun s(25);
  const auto & in = s.rc.inputs;
  const auto r = semfuse::run_pipeline(in, true);
  const auto painted = semfuse::paint_points(in.cloud, in.rig, in.masks, in.n_categories);
  EXPECT_EQ(r.dumps.painted->category, painted.category);
  EXPECT_EQ(r.painted_points, painted.painted_count());
  EXPECT_EQ(r.dumps.lidar_bev->data, semfuse::pillarize(painted, in.pillar).grid.data);
  EXPECT_EQ(r.points_pooled + r.points_outside, r.points_after_mask);
}

TEST(Pipeline, ThreadCountDoesNotChangeOutput)
{
  SmallRun s(26);
  std::vector<char> ref;
  for (int t : {1, 3, 8}) {
    fixtures::ThreadOverride o(t);
    const auto bytes = fused_bytes(s.rc.inputs);
    if (ref.empty()) {
      ref = bytes;
    } else {
      EXPECT_EQ(bytes, ref) << t << " threads";
    }
  }
}

TEST(Pipeline, DepthMaskKeepsOneBinPerPixel)
{
  SmallRun s(27);
  auto in = s.rc.inputs;
  in.mode = ViewMode::kAttentionDepthMask;
  const auto & f = in.features.front();
  for (auto & a : in.attention) {
    a = semfuse::DepthAttention::one_hot(f.width, f.height, in.bins.count, 5);
  }
  const auto r = semfuse::run_pipeline(in);
  EXPECT_EQ(r.points_after_mask * static_cast<std::size_t>(in.bins.count), r.points_lifted);
}

TEST(Pipeline, TimingsNameEveryStage)
{
  SmallRun s(28);
  const auto r = semfuse::run_pipeline(s.rc.inputs);
  std::vector<std::string> names;
  for (const auto & t : r.timings) {
    names.push_back(t.stage);
    EXPECT_GE(t.seconds, 0.0);
  }
  EXPECT_EQ(names, (std::vector<std::string>{"paint", "pillarize", "embed", "lift", "attend", "mask", "pool", "fuse"}));
}

TEST(Pipeline, ErrorsNameTheirStage)
{
  SmallRun s(29);
  auto stage_of = [](const semfuse::PipelineInputs & in) -> std::string {
    try {
      semfuse::run_pipeline(in);
    } catch (const semfuse::StageError & e) {
      return e.stage();
    }
    return "";
  };
  auto in = s.rc.inputs;
  in.masks.pop_back();
  EXPECT_EQ(stage_of(in), "inputs");

  in = s.rc.inputs;
  in.attention[2] = semfuse::DepthAttention::ones(3, 3, in.bins.count);
  EXPECT_EQ(stage_of(in), "attend");

  in = s.rc.inputs;
  in.kernel = semfuse::ConvKernel::zeros(2, 5, 1);
  EXPECT_EQ(stage_of(in), "fuse");

  in = s.rc.inputs;
  in.mode = ViewMode::kAttentionDepthMask;
  in.attention[0] = semfuse::DepthAttention::ones(in.features[0].width, in.features[0].height, in.bins.count);
  EXPECT_EQ(stage_of(in), "mask");
}

// Proposals on hand-built grids.

semfuse::BevGrid evidence_grid(int channels)
{
  semfuse::BevSpec spec;
  spec.extent = {-10, 10, -10, 10};
  spec.rows = 20;
  spec.cols = 20;
  spec.channels = channels;
  return semfuse::BevGrid(spec);
}

semfuse::ProposalConfig proposal_config(int n)
{
  semfuse::ProposalConfig cfg;
  cfg.n_categories = n;
  cfg.threshold = 1.0;
  cfg.min_cells = 2;
  cfg.push_out = 0.0;
  for (int k = 0; k < n; ++k) {
    cfg.sizes.emplace_back(1.0 + k, 2.0 + k, 1.5);
  }
  return cfg;
}

TEST(Proposals, TwoClusters)
{
  auto g = evidence_grid(3);
  // Category 1: cells (5,5) and (6,6), diagonal neighbors.
  g.at(1, 5, 5) = 3.0;
  g.at(1, 6, 6) = 1.5;
  // Category 2: a row of three.
  for (int c = 12; c < 15; ++c) g.at(2, 15, c) = 2.0;
  // Single cell below min_cells.
  g.at(0, 0, 0) = 9.0;
  // Exactly at threshold: not labeled.
  g.at(0, 19, 19) = 1.0;
  g.at(0, 19, 18) = 1.0;
  const auto boxes = semfuse::propose(g, proposal_config(3));
  ASSERT_EQ(boxes.size(), 2u);

  const auto [x55, y55] = g.spec.cell_center(5, 5);
  const auto [x66, y66] = g.spec.cell_center(6, 6);
  EXPECT_EQ(boxes[0].category, 1);
  EXPECT_NEAR(boxes[0].center.x(), (3.0 * x55 + 1.5 * x66) / 4.5, 1e-12);
  EXPECT_NEAR(boxes[0].center.y(), (3.0 * y55 + 1.5 * y66) / 4.5, 1e-12);
  EXPECT_NEAR(boxes[0].score, 4.5 / 24.5, 1e-12);
  EXPECT_EQ(boxes[0].size, semfuse::Vec3(2.0, 3.0, 1.5));
  EXPECT_EQ(boxes[0].center.z(), 0.75);

  EXPECT_EQ(boxes[1].category, 2);
  EXPECT_NEAR(boxes[1].score, 6.0 / 26.0, 1e-12);
}

TEST(Proposals, StrongestCategoryWinsAndTiesGoLow)
{
  auto g = evidence_grid(3);
  for (int c = 0; c < 2; ++c) {
    g.at(0, 3, c) = 2.0;
    g.at(1, 3, c) = 2.0;
    g.at(2, 3, c) = 1.5;
  }
  const auto boxes = semfuse::propose(g, proposal_config(3));
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].category, 0);
}

TEST(Proposals, PushOutMovesAwayFromEgo)
{
  auto g = evidence_grid(1);
  g.at(0, 15, 15) = 2.0;
  g.at(0, 15, 16) = 2.0;
  auto cfg = proposal_config(1);
  const auto near = semfuse::propose(g, cfg);
  cfg.push_out = 1.0;
  const auto far = semfuse::propose(g, cfg);
  ASSERT_EQ(near.size(), 1u);
  ASSERT_EQ(far.size(), 1u);
  const double r0 = std::hypot(near[0].center.x(), near[0].center.y());
  const double r1 = std::hypot(far[0].center.x(), far[0].center.y());
  EXPECT_NEAR(r1 - r0, 0.5, 1e-12);
}

TEST(Proposals, FirstChannelOffsetAndValidation)
{
  auto g = evidence_grid(4);
  g.at(3, 2, 2) = 5.0;
  g.at(3, 2, 3) = 5.0;
  auto cfg = proposal_config(2);
  cfg.first_channel = 2;
  const auto boxes = semfuse::propose(g, cfg);
  ASSERT_EQ(boxes.size(), 1u);
  EXPECT_EQ(boxes[0].category, 1);
  cfg.first_channel = 3;
  EXPECT_THROW(semfuse::propose(g, cfg), semfuse::ContractError);
  cfg = proposal_config(2);
  cfg.sizes.pop_back();
  EXPECT_THROW(semfuse::propose(g, cfg), semfuse::ContractError);
}

TEST(Proposals, EvidenceKernelsRouteCategories)
{
  semfuse::PillarSpec pillar;
  const auto k = semfuse::evidence_kernels(12, pillar, 10, 0.5, 2.0);
  const int hist = semfuse::histogram_offset(pillar);
  EXPECT_EQ(hist, 3);
  for (int c = 0; c < 10; ++c) {
    EXPECT_EQ(k.camera.w(c, c, 0, 0), 0.5);
    EXPECT_EQ(k.lidar.w(c, hist + c, 0, 0), 2.0);
  }
  const auto cat = k.concat();
  EXPECT_EQ(cat.in_channels, 12 + pillar.channel_count(10));
  pillar.layout = {semfuse::PillarChannel::kCount};
  EXPECT_THROW(semfuse::histogram_offset(pillar), semfuse::ContractError);
}

}  // namespace
