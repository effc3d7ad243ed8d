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
#include "semfuse/eval.hpp"
#include "semfuse/io.hpp"
#include "semfuse/paint.hpp"
#include "semfuse/synth.hpp"

namespace
{

using semfuse::Scene;
using semfuse::SceneConfig;
using semfuse::Vec3;

/// Box-frame coordinates of an ego point, computed from yaw directly.
Vec3 local(const semfuse::Box3D & b, const Vec3 & p)
{
  const Vec3 d = p - b.center;
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

/// Inside the box's footprint (x along length, y along width), shrunk by eps.
bool inside(const semfuse::Box3D & b, const Vec3 & p, double eps)
{
  const Vec3 l = local(b, p);
  return std::abs(l.x()) < b.size.y() / 2 - eps && std::abs(l.y()) < b.size.x() / 2 - eps && std::abs(l.z()) < b.size.z() / 2 - eps;
}

TEST(Synth, EmptyScene)
{
  SceneConfig cfg;
  cfg.n_objects = 0;
  const Scene s = semfuse::synthesize(cfg);
  EXPECT_TRUE(s.gt_boxes.empty());
  EXPECT_FALSE(s.cloud.empty());
  for (std::size_t i = 0; i < s.cloud.size(); ++i) {
    EXPECT_EQ(s.point_source[i], -1);
    EXPECT_EQ(s.cloud[i].z, 0.0f);
  }
  for (const auto & m : s.masks_per_camera) {
    EXPECT_TRUE(m.empty());
  }
  EXPECT_EQ(s.foreground_fraction(), 0.0);
}

TEST(Synth, SameSeedSameBytes)
{
  SceneConfig cfg;
  cfg.seed = 17;
  cfg.mask_noise = 0.1;
  const Scene a = semfuse::synthesize(cfg);
  const Scene b = semfuse::synthesize(cfg);
  EXPECT_EQ(semfuse::io::encode_cloud(a.cloud), semfuse::io::encode_cloud(b.cloud));
  EXPECT_EQ(semfuse::io::encode_boxes(a.gt_boxes), semfuse::io::encode_boxes(b.gt_boxes));
  ASSERT_EQ(a.masks_per_camera.size(), b.masks_per_camera.size());
  for (std::size_t c = 0; c < a.masks_per_camera.size(); ++c) {
    ASSERT_EQ(a.masks_per_camera[c].size(), b.masks_per_camera[c].size());
    for (std::size_t k = 0; k < a.masks_per_camera[c].size(); ++k) {
      EXPECT_EQ(semfuse::io::encode_mask(a.masks_per_camera[c][k]), semfuse::io::encode_mask(b.masks_per_camera[c][k]));
    }
    EXPECT_EQ(a.feature_images[c].data, b.feature_images[c].data);
  }
  cfg.seed = 18;
  EXPECT_NE(semfuse::io::encode_cloud(semfuse::synthesize(cfg).cloud), semfuse::io::encode_cloud(a.cloud));
}

TEST(Synth, ThreadCountDoesNotChangeScene)
{
  SceneConfig cfg;
  cfg.seed = 5;
  std::vector<char> ref;
  for (int t : {1, 4}) {
    fixtures::ThreadOverride o(t);
    const auto bytes = semfuse::io::encode_cloud(semfuse::synthesize(cfg).cloud);
    if (ref.empty()) {
      ref = bytes;
    } else {
      EXPECT_EQ(bytes, ref);
    }
  }
}

TEST(Synth, BoxesInsideAndDisjoint)
{
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.n_objects = 12;
    cfg.with_features = false;
    const Scene s = semfuse::synthesize(cfg);
    for (std::size_t i = 0; i < s.gt_boxes.size(); ++i) {
      const auto & a = s.gt_boxes[i];
      EXPECT_NO_THROW(a.validate());
      EXPECT_LE(std::abs(a.center.x()) + a.size.norm() / 2, cfg.extent);
      EXPECT_LE(std::abs(a.center.y()) + a.size.norm() / 2, cfg.extent);
      // Sample the footprint of every other box densely.
      for (std::size_t j = 0; j < s.gt_boxes.size(); ++j) {
        if (i == j) {
          continue;
        }
        const auto & b = s.gt_boxes[j];
        for (double u = -0.5; u <= 0.5; u += 0.05) {
          for (double v = -0.5; v <= 0.5; v += 0.05) {
            const double c = std::cos(b.yaw);
            const double sn = std::sin(b.yaw);
            const double lx = u * b.size.y();
            const double ly = v * b.size.x();
            const Vec3 p(b.center.x() + c * lx - sn * ly, b.center.y() + sn * lx + c * ly, a.center.z());
            ASSERT_FALSE(inside(a, p, 0.0)) << "boxes " << i << " and " << j << " overlap, seed " << seed;
          }
        }
      }
    }
  }
}

TEST(Synth, PointsLieOnSurfacesAndAreVisible)
{
  SceneConfig cfg;
  cfg.seed = 3;
  cfg.with_features = false;
  const Scene s = semfuse::synthesize(cfg);
  std::size_t on_object = 0;
  for (std::size_t i = 0; i < s.cloud.size(); ++i) {
    const Vec3 p = s.cloud[i].position();
    const int src = s.point_source[i];
    if (src < 0) {
      EXPECT_EQ(p.z(), 0.0);
    } else {
      ++on_object;
      const auto & b = s.gt_boxes[static_cast<std::size_t>(src)];
      const Vec3 l = local(b, p);
      const Vec3 half(b.size.y() / 2, b.size.x() / 2, b.size.z() / 2);
      double face_gap = 1e9;
      for (int k = 0; k < 3; ++k) {
        EXPECT_LE(std::abs(l[k]), half[k] + 1e-4);
        face_gap = std::min(face_gap, half[k] - std::abs(l[k]));
      }
      EXPECT_LT(face_gap, 1e-4) << "point " << i << " is not on a face";
    }
    // Nothing solid between the sensor and the point.
    for (int t = 1; t < 100; ++t) {
      const Vec3 q = cfg.lidar_origin + (p - cfg.lidar_origin) * (t / 100.0);
      for (std::size_t k = 0; k < s.gt_boxes.size(); ++k) {
        ASSERT_FALSE(inside(s.gt_boxes[k], q, 0.02)) << "point " << i << " is occluded by box " << k;
      }
    }
  }
  EXPECT_GT(on_object, 100u);
}

TEST(Synth, MaskCategoriesFollowTheirBoxes)
{
  SceneConfig cfg;
  cfg.seed = 9;
  cfg.with_features = false;
  const Scene s = semfuse::synthesize(cfg);
  std::size_t n = 0;
  for (std::size_t c = 0; c < s.masks_per_camera.size(); ++c) {
    ASSERT_EQ(s.masks_per_camera[c].size(), s.mask_source[c].size());
    for (std::size_t k = 0; k < s.masks_per_camera[c].size(); ++k) {
      const auto & m = s.masks_per_camera[c][k];
      EXPECT_EQ(m.category, s.gt_boxes[static_cast<std::size_t>(s.mask_source[c][k])].category);
      EXPECT_GT(m.area(), 0u);
      EXPECT_EQ(m.width, s.rig[c].width());
      ++n;
    }
  }
  EXPECT_GT(n, 0u);
}

TEST(Synth, NoiselessMasksPaintTheirObjects)
{
  std::size_t hits = 0;
  std::size_t total = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.with_features = false;
    const Scene s = semfuse::synthesize(cfg);
    const auto painted = semfuse::paint_points(s.cloud, s.rig, s.masks_per_camera, s.n_categories);
    for (std::size_t i = 0; i < s.cloud.size(); ++i) {
      const int src = s.point_source[i];
      if (src < 0) {
        continue;
      }
      bool visible = false;
      for (const auto & cam : s.rig) {
        visible = visible || semfuse::project_to_image(s.cloud[i].position(), cam).has_value();
      }
      if (!visible) {
        continue;
      }
      ++total;
      hits += painted.category[i] == s.gt_boxes[static_cast<std::size_t>(src)].category;
    }
  }
  ASSERT_GT(total, 1000u);
  EXPECT_GE(static_cast<double>(hits) / static_cast<double>(total), 0.99);
}

TEST(Synth, MaskNoiseDropsPixels)
{
  SceneConfig cfg;
  cfg.seed = 2;
  cfg.with_features = false;
  const Scene clean = semfuse::synthesize(cfg);
  cfg.mask_noise = 0.5;
  const Scene noisy = semfuse::synthesize(cfg);
  std::size_t a = 0;
  std::size_t b = 0;
  for (std::size_t c = 0; c < clean.masks_per_camera.size(); ++c) {
    for (const auto & m : clean.masks_per_camera[c]) a += m.area();
    for (const auto & m : noisy.masks_per_camera[c]) b += m.area();
  }
  EXPECT_NEAR(static_cast<double>(b) / static_cast<double>(a), 0.5, 0.02);
}

TEST(Synth, TargetForegroundFraction)
{
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    SceneConfig cfg;
    cfg.seed = seed;
    cfg.with_features = false;
    cfg.target_fg_fraction = 0.1564;
    const Scene s = semfuse::synthesize(cfg);
    EXPECT_NEAR(s.foreground_fraction(), 0.1564, 0.002);
  }
}

TEST(Synth, UnreachableTargetFails)
{
  SceneConfig cfg;
  cfg.with_features = false;
  cfg.target_fg_fraction = 0.95;
  cfg.max_attempts = 200;
  EXPECT_THROW(semfuse::synthesize(cfg), semfuse::ContractError);
}

TEST(Synth, ConfigValidation)
{
  SceneConfig cfg;
  cfg.points_per_m2 = 0.0;
  EXPECT_THROW(cfg.validate(), semfuse::ContractError);
  cfg = SceneConfig{};
  cfg.category_weights.assign(10, 0.0);
  EXPECT_THROW(cfg.validate(), semfuse::ContractError);
  cfg = SceneConfig{};
  cfg.mask_noise = 1.0;
  EXPECT_THROW(cfg.validate(), semfuse::ContractError);
}

TEST(Synth, FeatureImagesAreBounded)
{
  SceneConfig cfg;
  cfg.seed = 4;
  const Scene s = semfuse::synthesize(cfg);
  ASSERT_EQ(s.feature_images.size(), s.rig.size());
  for (const auto & f : s.feature_images) {
    EXPECT_EQ(f.channels, 80);
    EXPECT_EQ(f.height, 32);
    EXPECT_EQ(f.width, 88);
    for (double v : f.data) {
      ASSERT_GE(v, -1.0);
      ASSERT_LE(v, 1.0);
    }
  }
}

TEST(Synth, OracleDetections)
{
  SceneConfig cfg;
  cfg.seed = 6;
  cfg.with_features = false;
  const Scene s = semfuse::synthesize(cfg);
  const auto exact = semfuse::oracle_detections(s, {}, 1);
  ASSERT_EQ(exact.size(), s.gt_boxes.size());
  EXPECT_EQ(semfuse::io::encode_boxes(exact), semfuse::io::encode_boxes(s.gt_boxes));
  EXPECT_EQ(semfuse::evaluate(exact, s.gt_boxes, semfuse::EvalConfig{}).mean_ap, 1.0);

  semfuse::Perturbation drop;
  drop.drop_rate = 1.0;
  const auto none = semfuse::oracle_detections(s, drop, 1);
  EXPECT_TRUE(none.empty());
  EXPECT_EQ(semfuse::evaluate(none, s.gt_boxes, semfuse::EvalConfig{}).mean_ap, 0.0);

  semfuse::Perturbation noisy{0.5, 0.1, 0.1, 0.2, 0.5};
  EXPECT_EQ(semfuse::io::encode_boxes(semfuse::oracle_detections(s, noisy, 7)),
            semfuse::io::encode_boxes(semfuse::oracle_detections(s, noisy, 7)));
  semfuse::Perturbation bad;
  bad.sigma_center = -1.0;
  EXPECT_THROW(semfuse::oracle_detections(s, bad, 1), semfuse::ContractError);
}

TEST(Synth, DepthOracleAttentionIsNormalized)
{
  SceneConfig cfg;
  cfg.seed = 8;
  cfg.with_features = false;
  const Scene s = semfuse::synthesize(cfg);
  const semfuse::DepthBinning bins;
  const auto att = semfuse::depth_oracle_attention(s, 0, bins, 1.0);
  EXPECT_EQ(att.width, s.feature_w);
  EXPECT_EQ(att.n_bins, bins.count);
  EXPECT_TRUE(att.normalized);
  EXPECT_NO_THROW(att.validate());
}

}  // namespace
