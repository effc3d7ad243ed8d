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

#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "semfuse/common.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/masks.hpp"

namespace semfuse
{

/// Raw LiDAR return in the ego frame. Stored as float to match the on-disk
/// record layout.
struct LidarPoint
{
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  float t = 0.0f;          // time offset, seconds
  float intensity = 0.0f;  // [0, 1]

  Vec3 position() const { return {x, y, z}; }

  friend bool operator==(const LidarPoint &, const LidarPoint &) = default;
};

/// LiDAR points decorated with a category and a confidence. The one-hot
/// category vector is stored as its index (-1 when unpainted), which keeps
/// the at-most-one-hot invariant by construction.
struct SemanticPointCloud
{
  int n_categories = 0;
  std::vector<LidarPoint> points;
  std::vector<int> category;
  std::vector<float> score;

  std::size_t size() const { return points.size(); }

  float one_hot(std::size_t i, int c) const { return category[i] == c ? 1.0f : 0.0f; }

  bool painted(std::size_t i) const { return category[i] >= 0; }

  std::size_t painted_count() const
  {
    std::size_t n = 0;
    for (int c : category) {
      n += c >= 0;
    }
    return n;
  }

  /// Unpainted cloud: every point carries the zero one-hot and score 0.
  static SemanticPointCloud unpainted(std::vector<LidarPoint> pts, int n_categories)
  {
    SemanticPointCloud out;
    out.n_categories = n_categories;
    out.category.assign(pts.size(), -1);
    out.score.assign(pts.size(), 0.0f);
    out.points = std::move(pts);
    return out;
  }

  void validate() const
  {
    require(n_categories >= 0, "category count must be non-negative");
    require(category.size() == points.size() && score.size() == points.size(), "semantic cloud channel length mismatch");
    for (std::size_t i = 0; i < points.size(); ++i) {
      const auto & p = points[i];
      require(std::isfinite(p.x) && std::isfinite(p.y) && std::isfinite(p.z), "point coordinates must be finite");
      require(category[i] >= -1 && category[i] < n_categories, "painted category out of range");
      require(score[i] >= 0.0f && score[i] <= 1.0f, "painted score out of range");
      require((category[i] < 0) == (score[i] == 0.0f), "score must be zero exactly when the point is unpainted");
    }
  }
};

/// Pixel that holds an image-plane coordinate: pixel k spans [k, k + 1), so
/// flooring picks the pixel whose center is nearest.
inline std::pair<int, int> pixel_of(const ImagePoint & ip) { return {static_cast<int>(std::floor(ip.u)), static_cast<int>(std::floor(ip.v))}; }

/// Decorates each point with the best instance covering its projection in
/// any camera. Precedence: higher score, lower category, lower camera index,
/// lower instance index. Points that hit no instance (or only zero-score
/// instances) stay unpainted.
inline SemanticPointCloud paint_points(
  std::span<const LidarPoint> points, std::span<const CameraModel> rig,
  std::span<const std::vector<InstanceMask>> masks_per_camera, int n_categories)
{
  require(rig.size() == masks_per_camera.size(), "rig and mask lists must have equal length");
  require(n_categories >= 1, "category count must be positive");
  for (std::size_t c = 0; c < rig.size(); ++c) {
    for (const auto & m : masks_per_camera[c]) {
      m.validate();
      require(m.width == rig[c].width() && m.height == rig[c].height(), "mask size differs from its camera image");
      require(m.category < n_categories, "mask category exceeds category count");
    }
  }

  SemanticPointCloud out = SemanticPointCloud::unpainted({points.begin(), points.end()}, n_categories);
  parallel_for(points.size(), [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const Vec3 p = points[i].position();
      bool found = false;
      double best_score = 0.0;
      int best_cat = 0;
      std::size_t best_ord = 0;
      for (std::size_t c = 0; c < rig.size(); ++c) {
        const auto ip = project_to_image(p, rig[c]);
        if (!ip) {
          continue;
        }
        const auto [x, y] = pixel_of(*ip);
        const auto & masks = masks_per_camera[c];
        for (std::size_t k = 0; k < masks.size(); ++k) {
          // A zero-score instance would yield a painted point with score 0,
          // which the cloud invariant forbids.
          if (static_cast<float>(masks[k].score) <= 0.0f || !masks[k].at(x, y)) {
            continue;
          }
          // Camera-major ordinal encodes "lower camera, then lower instance".
          const std::size_t ord = (c << 32) | k;
          if (!found || outranks(masks[k].score, masks[k].category, ord, best_score, best_cat, best_ord)) {
            found = true;
            best_score = masks[k].score;
            best_cat = masks[k].category;
            best_ord = ord;
          }
        }
      }
      if (found) {
        out.category[i] = best_cat;
        out.score[i] = static_cast<float>(best_score);
      }
    }
  });
  return out;
}

}  // namespace semfuse
