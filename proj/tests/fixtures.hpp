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

// Random inputs shared by the unit tests and the acceptance binary.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "semfuse/bev_fuse.hpp"
#include "semfuse/eval.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/masks.hpp"
#include "semfuse/paint.hpp"
#include "semfuse/view_transform.hpp"

namespace fixtures
{

using semfuse::Vec3;

inline double uniform(std::mt19937_64 & rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(std::mt19937_64 & rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

/// Rotation from Euler angles; any proper rotation will do.
inline semfuse::Mat3 rotation(double yaw, double pitch, double roll)
{
  return (Eigen::AngleAxisd(yaw, Vec3::UnitZ()) * Eigen::AngleAxisd(pitch, Vec3::UnitY()) * Eigen::AngleAxisd(roll, Vec3::UnitX()))
    .toRotationMatrix();
}

inline semfuse::RigidTransform random_pose(std::mt19937_64 & rng)
{
  return semfuse::RigidTransform(
    rotation(uniform(rng, -3, 3), uniform(rng, -1.5, 1.5), uniform(rng, -3, 3)),
    Vec3(uniform(rng, -5, 5), uniform(rng, -5, 5), uniform(rng, -5, 5)));
}

inline semfuse::CameraModel random_camera(std::mt19937_64 & rng)
{
  const int w = uniform_int(rng, 64, 1600);
  const int h = uniform_int(rng, 48, 900);
  return semfuse::CameraModel(
    uniform(rng, 200, 1500), uniform(rng, 200, 1500), uniform(rng, 0.3, 0.7) * w, uniform(rng, 0.3, 0.7) * h, w, h,
    random_pose(rng), "random");
}

/// Camera with identity extrinsic: ego frame = camera frame.
inline semfuse::CameraModel axis_camera(double f = 100.0, int w = 100, int h = 100)
{
  return semfuse::CameraModel(f, f, w / 2.0, h / 2.0, w, h, semfuse::RigidTransform(), "axis");
}

/// Camera at `height` above the ego origin looking along `yaw`.
inline semfuse::CameraModel yaw_camera(double yaw, int w = 160, int h = 96, double height = 1.5)
{
  const double f = (w / 2.0) / std::tan(35.0 * std::numbers::pi / 180.0);
  return semfuse::CameraModel(f, f, w / 2.0, h / 2.0, w, h, semfuse::look_along_yaw(yaw, Vec3(0, 0, height)), "yaw");
}

inline semfuse::FeatureImage random_features(std::mt19937_64 & rng, int c, int h, int w)
{
  semfuse::FeatureImage f(c, h, w);
  for (auto & v : f.data) {
    v = uniform(rng, -1, 1);
  }
  return f;
}

/// Rectangular mask covering [x0, x1) x [y0, y1).
inline semfuse::InstanceMask rect_mask(int w, int h, int x0, int y0, int x1, int y1, int cat, double score)
{
  semfuse::InstanceMask m(w, h, cat, score);
  for (int y = y0; y < y1; ++y) {
    for (int x = x0; x < x1; ++x) {
      m.set(x, y);
    }
  }
  return m;
}

inline semfuse::InstanceMask random_blob(std::mt19937_64 & rng, int w, int h, int n_categories)
{
  const int x0 = uniform_int(rng, 0, w - 1);
  const int y0 = uniform_int(rng, 0, h - 1);
  return rect_mask(w, h, x0, y0, uniform_int(rng, x0 + 1, w), uniform_int(rng, y0 + 1, h), uniform_int(rng, 0, n_categories - 1),
    std::round(uniform(rng, 0, 1) * 10.0) / 10.0);  // coarse scores force ties
}

inline semfuse::SemanticPointCloud random_painted_cloud(std::mt19937_64 & rng, std::size_t n, int n_categories, double span)
{
  semfuse::SemanticPointCloud c;
  c.n_categories = n_categories;
  for (std::size_t i = 0; i < n; ++i) {
    semfuse::LidarPoint p;
    p.x = static_cast<float>(uniform(rng, -span, span));
    p.y = static_cast<float>(uniform(rng, -span, span));
    p.z = static_cast<float>(uniform(rng, -4, 8));
    p.t = static_cast<float>(uniform(rng, 0, 0.1));
    p.intensity = static_cast<float>(uniform(rng, 0, 1));
    c.points.push_back(p);
    const int cat = uniform_int(rng, -1, n_categories - 1);
    c.category.push_back(cat);
    c.score.push_back(cat < 0 ? 0.0f : static_cast<float>(uniform(rng, 0.05, 1)));
  }
  return c;
}

inline semfuse::BevGrid random_grid(std::mt19937_64 & rng, const semfuse::BevSpec & spec)
{
  semfuse::BevGrid g(spec);
  for (auto & v : g.data) {
    v = uniform(rng, -1, 1);
  }
  return g;
}

inline semfuse::ConvKernel random_kernel(std::mt19937_64 & rng, int out, int in, int k)
{
  auto kern = semfuse::ConvKernel::zeros(out, in, k);
  for (auto & v : kern.weights) {
    v = uniform(rng, -1, 1);
  }
  for (auto & v : kern.bias) {
    v = uniform(rng, -1, 1);
  }
  return kern;
}

/// Pseudo points with random positions (some outside the extent) and
/// random per-point feature rows, one table row per point.
inline semfuse::PseudoPointSet random_pseudo_points(std::mt19937_64 & rng, std::size_t n, int channels, double span)
{
  semfuse::FeatureImage img(channels, 1, static_cast<int>(n));
  for (auto & v : img.data) {
    v = uniform(rng, -1, 1);
  }
  semfuse::PseudoPointSet pp;
  pp.channels = channels;
  pp.grid_width = static_cast<int>(n);
  pp.grid_height = 1;
  pp.n_bins = 1;
  pp.tables.push_back(std::make_shared<const semfuse::FeatureTable>(img));
  for (std::size_t i = 0; i < n; ++i) {
    pp.positions.emplace_back(uniform(rng, -span, span), uniform(rng, -span, span), uniform(rng, -3, 3));
    pp.weights.push_back(uniform(rng, 0, 2));
    pp.sources.push_back({0, static_cast<std::uint32_t>(i), 0});
  }
  return pp;
}

inline semfuse::Box3D box(int cat, double score, double x, double y, int sample = 0)
{
  semfuse::Box3D b;
  b.category = cat;
  b.score = score;
  b.center = Vec3(x, y, 0.8);
  b.size = Vec3(2.0, 4.5, 1.6);
  b.velocity = Eigen::Vector2d(1.0, 0.5);
  b.attribute = 1;
  b.sample = sample;
  return b;
}

/// Five ground truths and seven detections of one category. Matches depend
/// on the threshold: 0.5 m takes only (10.2, 0.1), 2 m adds three more.
inline std::vector<semfuse::Box3D> hand_gts()
{
  return {box(0, 1, 10, 0), box(0, 1, 20, 0), box(0, 1, 0, 15), box(0, 1, -12, -5), box(0, 1, 30, 30)};
}

inline std::vector<semfuse::Box3D> hand_dets()
{
  return {box(0, 0.95, 10.5, 0), box(0, 0.90, 25, 0), box(0, 0.85, 20.3, 0.4), box(0, 0.70, 0, 16.5),
          box(0, 0.60, 40, -40), box(0, 0.50, -12, -5.9), box(0, 0.30, 10.2, 0.1)};
}

/// Scoped override of the worker-count environment variable.
class ThreadOverride
{
public:
  explicit ThreadOverride(int n)
  {
    if (const char * old = std::getenv(semfuse::kThreadsEnv)) {
      saved_ = old;
      had_ = true;
    }
    ::setenv(semfuse::kThreadsEnv, std::to_string(n).c_str(), 1);
  }
  ~ThreadOverride()
  {
    if (had_) {
      ::setenv(semfuse::kThreadsEnv, saved_.c_str(), 1);
    } else {
      ::unsetenv(semfuse::kThreadsEnv);
    }
  }
  ThreadOverride(const ThreadOverride &) = delete;
  ThreadOverride & operator=(const ThreadOverride &) = delete;

private:
  std::string saved_;
  bool had_ = false;
};

}  // namespace fixtures
