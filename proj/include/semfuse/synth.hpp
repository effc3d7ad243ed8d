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

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <numeric>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "semfuse/common.hpp"
#include "semfuse/eval.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/masks.hpp"
#include "semfuse/paint.hpp"
#include "semfuse/view_transform.hpp"

namespace semfuse
{

// ---------------------------------------------------------------------------
// Randomness. Only the raw mt19937_64 engine is used; the conversions below
// are spelled out so streams are identical across standard libraries.

inline std::uint64_t splitmix64(std::uint64_t x)
{
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0)
{
  return splitmix64(splitmix64(splitmix64(seed ^ splitmix64(a)) ^ b) ^ c);
}

/// Uniform double in [0, 1) from 53 high bits.
inline double unit_from_bits(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

class Rng
{
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unit_from_bits(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Box-Muller standard normal.
  double normal()
  {
    double u1 = uniform();
    while (u1 <= 0.0) {
      u1 = uniform();
    }
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Index drawn with probability proportional to `weights`.
  std::size_t pick(const std::vector<double> & weights)
  {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double r = uniform() * total;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (r < weights[i]) {
        return i;
      }
      r -= weights[i];
    }
    for (std::size_t i = weights.size(); i-- > 0;) {
      if (weights[i] > 0.0) {
        return i;
      }
    }
    return 0;
  }

  /// floor(x) plus a Bernoulli draw on the fractional part.
  std::size_t stochastic_round(double x)
  {
    const double base = std::floor(x);
    return static_cast<std::size_t>(base) + (uniform() < x - base ? 1 : 0);
  }

private:
  std::mt19937_64 engine_;
};

// ---------------------------------------------------------------------------
// Configuration.

struct CategoryTemplate
{
  std::string name;
  Vec3 size;  // (w, l, h)
};

/// nuScenes-like detection classes with typical box sizes.
inline std::vector<CategoryTemplate> default_categories()
{
  return {
    {"car", {1.9, 4.6, 1.7}},
    {"truck", {2.5, 6.9, 2.8}},
    {"construction_vehicle", {2.8, 6.4, 3.2}},
    {"bus", {2.9, 11.0, 3.5}},
    {"trailer", {2.9, 12.0, 3.9}},
    {"barrier", {2.5, 0.5, 1.0}},
    {"motorcycle", {0.8, 2.1, 1.5}},
    {"bicycle", {0.6, 1.7, 1.3}},
    {"pedestrian", {0.7, 0.7, 1.75}},
    {"traffic_cone", {0.4, 0.4, 1.1}},
  };
}

/// Six level cameras spaced 60 degrees apart at 1.6 m, 70 degree horizontal
/// field of view, 704 x 256 images.
inline std::vector<CameraModel> default_rig()
{
  static const char * names[] = {"CAM_FRONT", "CAM_FRONT_LEFT", "CAM_BACK_LEFT", "CAM_BACK", "CAM_BACK_RIGHT", "CAM_FRONT_RIGHT"};
  const int width = 704;
  const int height = 256;
  const double f = (width / 2.0) / std::tan(35.0 * std::numbers::pi / 180.0);
  std::vector<CameraModel> rig;
  for (int k = 0; k < 6; ++k) {
    const double yaw = k * std::numbers::pi / 3.0;
    const Vec3 pos(0.3 * std::cos(yaw), 0.3 * std::sin(yaw), 1.6);
    rig.emplace_back(f, f, width / 2.0, height / 2.0, width, height, look_along_yaw(yaw, pos), names[k]);
  }
  return rig;
}

struct SceneConfig
{
  std::uint64_t seed = 0;
  int n_objects = 8;
  std::vector<double> category_weights = std::vector<double>(10, 1.0);
  std::vector<CategoryTemplate> categories = default_categories();
  double extent = 54.0;       // half-width of the square scene, meters
  double min_range = 5.0;     // object centers at least this far from ego
  double max_range = 40.0;
  double points_per_m2 = 20.0;        // on object faces
  double ground_points_per_m2 = 0.5;  // on the ground plane
  Vec3 lidar_origin{0.0, 0.0, 1.8};
  std::vector<CameraModel> rig = default_rig();
  double mask_noise = 0.0;  // per-pixel dropout probability
  std::optional<double> target_fg_fraction;
  double fg_tolerance = 0.002;
  int max_attempts = 20000;
  int feature_w = 88;
  int feature_h = 32;
  int feature_channels = 80;
  bool with_features = true;

  int n_categories() const { return static_cast<int>(category_weights.size()); }

  void validate() const
  {
    require(n_objects >= 0, "object count must be non-negative");
    require(!category_weights.empty(), "category weights must be non-empty");
    require(category_weights.size() <= categories.size(), "every weighted category needs a size template");
    bool any = false;
    for (double w : category_weights) {
      require(std::isfinite(w) && w >= 0.0, "category weights must be non-negative");
      any = any || w > 0.0;
    }
    require(any, "category weights must not all be zero");
    require(points_per_m2 > 0.0 && ground_points_per_m2 >= 0.0, "point density must be positive");
    require(extent > 0.0 && min_range >= 0.0 && max_range > min_range, "invalid placement ranges");
    require(mask_noise >= 0.0 && mask_noise < 1.0, "mask noise must lie in [0, 1)");
    require(!target_fg_fraction || (*target_fg_fraction > 0.0 && *target_fg_fraction < 1.0), "target foreground fraction must lie in (0, 1)");
    require(fg_tolerance > 0.0 && max_attempts > 0, "invalid rejection parameters");
    require(feature_w >= 1 && feature_h >= 1 && feature_channels >= 1, "feature dimensions must be positive");
    require(!rig.empty(), "rig must contain at least one camera");
  }
};

struct Scene
{
  std::vector<CameraModel> rig;
  int n_categories = 0;
  int feature_w = 0;
  int feature_h = 0;
  std::vector<Box3D> gt_boxes;
  std::vector<double> mask_scores;            // per box
  std::vector<LidarPoint> cloud;
  std::vector<int> point_source;              // generating box, -1 = ground
  std::vector<std::vector<InstanceMask>> masks_per_camera;
  std::vector<std::vector<int>> mask_source;  // generating box per mask
  std::vector<FeatureImage> feature_images;

  /// Mean over cameras of the foreground fraction of the downscaled masks.
  double foreground_fraction() const
  {
    double sum = 0.0;
    for (const auto & masks : masks_per_camera) {
      sum += downscale_masks(masks, feature_w, feature_h).foreground_fraction();
    }
    return masks_per_camera.empty() ? 0.0 : sum / static_cast<double>(masks_per_camera.size());
  }
};

// ---------------------------------------------------------------------------
// Box geometry helpers.

inline std::array<Vec3, 8> box_corners(const Box3D & b)
{
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  const double hl = b.size.y() / 2.0;
  const double hw = b.size.x() / 2.0;
  const double hh = b.size.z() / 2.0;
  std::array<Vec3, 8> out;
  int k = 0;
  for (int dz : {-1, 1}) {
    for (int dx : {-1, 1}) {
      for (int dy : {-1, 1}) {
        const double lx = dx * hl;
        const double ly = dy * hw;
        out[static_cast<std::size_t>(k++)] = b.center + Vec3(c * lx - s * ly, s * lx + c * ly, dz * hh);
      }
    }
  }
  return out;
}

/// Box-frame coordinates (x along heading) of an ego-frame point.
inline Vec3 to_box_frame(const Box3D & b, const Vec3 & p)
{
  const Vec3 d = p - b.center;
  const double c = std::cos(b.yaw);
  const double s = std::sin(b.yaw);
  return {c * d.x() + s * d.y(), -s * d.x() + c * d.y(), d.z()};
}

/// Parameter t in [0, 1] where the segment a + t (b - a) first enters the
/// box, if it does.
inline std::optional<double> segment_entry(const Box3D & box, const Vec3 & a, const Vec3 & b)
{
  const Vec3 la = to_box_frame(box, a);
  const Vec3 lb = to_box_frame(box, b);
  const Vec3 d = lb - la;
  const Vec3 half(box.size.y() / 2.0, box.size.x() / 2.0, box.size.z() / 2.0);
  double t0 = 0.0;
  double t1 = 1.0;
  for (int k = 0; k < 3; ++k) {
    if (std::abs(d[k]) < 1e-15) {
      if (la[k] < -half[k] || la[k] > half[k]) {
        return std::nullopt;
      }
      continue;
    }
    double ta = (-half[k] - la[k]) / d[k];
    double tb = (half[k] - la[k]) / d[k];
    if (ta > tb) {
      std::swap(ta, tb);
    }
    t0 = std::max(t0, ta);
    t1 = std::min(t1, tb);
    if (t0 > t1) {
      return std::nullopt;
    }
  }
  return t0;
}

/// Separating-axis overlap test of the BEV footprints, each inflated by
/// `margin` meters.
inline bool footprints_overlap(const Box3D & a, const Box3D & b, double margin)
{
  auto axes_of = [](const Box3D & x) {
    return std::array<Eigen::Vector2d, 2>{
      Eigen::Vector2d(std::cos(x.yaw), std::sin(x.yaw)), Eigen::Vector2d(-std::sin(x.yaw), std::cos(x.yaw))};
  };
  const auto aa = axes_of(a);
  const auto ab = axes_of(b);
  const Eigen::Vector2d ha(a.size.y() / 2.0 + margin, a.size.x() / 2.0 + margin);
  const Eigen::Vector2d hb(b.size.y() / 2.0 + margin, b.size.x() / 2.0 + margin);
  const Eigen::Vector2d d = b.center.head<2>() - a.center.head<2>();
  for (const auto & axis : {aa[0], aa[1], ab[0], ab[1]}) {
    const double ra = ha.x() * std::abs(aa[0].dot(axis)) + ha.y() * std::abs(aa[1].dot(axis));
    const double rb = hb.x() * std::abs(ab[0].dot(axis)) + hb.y() * std::abs(ab[1].dot(axis));
    if (std::abs(d.dot(axis)) > ra + rb) {
      return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------
// Mask rendering.

using Point2 = Eigen::Vector2d;

/// Counter-clockwise convex hull (Andrew's monotone chain).
inline std::vector<Point2> convex_hull(std::vector<Point2> pts)
{
  std::sort(pts.begin(), pts.end(), [](const Point2 & a, const Point2 & b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) {
    return pts;
  }
  auto cross = [](const Point2 & o, const Point2 & a, const Point2 & b) {
    return (a.x() - o.x()) * (b.y() - o.y()) - (a.y() - o.y()) * (b.x() - o.x());
  };
  std::vector<Point2> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto & p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) {
      --k;
    }
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i-- > 0;) {
    while (k >= lower && cross(hull[k - 2], hull[k - 1], pts[i]) <= 0.0) {
      --k;
    }
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

/// True when the convex hull touches the unit pixel square at (x, y).
/// Separating axes are the square's two axes and the hull's edge normals.
inline bool touches_pixel(const std::vector<Point2> & hull, int x, int y)
{
  if (hull.size() < 3) {
    return false;
  }
  const double x0 = x, x1 = x + 1.0, y0 = y, y1 = y + 1.0;
  double hx0 = hull[0].x(), hx1 = hx0, hy0 = hull[0].y(), hy1 = hy0;
  for (const auto & p : hull) {
    hx0 = std::min(hx0, p.x());
    hx1 = std::max(hx1, p.x());
    hy0 = std::min(hy0, p.y());
    hy1 = std::max(hy1, p.y());
  }
  if (hx1 < x0 || hx0 > x1 || hy1 < y0 || hy0 > y1) {
    return false;
  }
  const Point2 sq[4] = {{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}};
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const Point2 & a = hull[i];
    const Point2 & b = hull[(i + 1) % hull.size()];
    bool all_out = true;
    for (const auto & c : sq) {
      if ((b.x() - a.x()) * (c.y() - a.y()) - (b.y() - a.y()) * (c.x() - a.x()) >= 0.0) {
        all_out = false;
        break;
      }
    }
    if (all_out) {
      return false;
    }
  }
  return true;
}

/// Image-plane silhouette hull of a box: the 12 edges clipped to the
/// camera's near plane, projected without image-bounds clipping.
inline std::vector<Point2> projected_hull(const Box3D & box, const CameraModel & cam, double near = 0.05)
{
  static constexpr int kEdges[12][2] = {{0, 1}, {2, 3}, {4, 5}, {6, 7}, {0, 2}, {1, 3}, {4, 6}, {5, 7}, {0, 4}, {1, 5}, {2, 6}, {3, 7}};
  const auto corners = box_corners(box);
  std::array<Vec3, 8> pc;
  for (std::size_t i = 0; i < 8; ++i) {
    pc[i] = cam.cam_from_ego().apply(corners[i]);
  }
  std::vector<Point2> pts;
  auto emit = [&](const Vec3 & p) { pts.emplace_back(cam.fx() * p.x() / p.z() + cam.cx(), cam.fy() * p.y() / p.z() + cam.cy()); };
  for (const auto & e : kEdges) {
    const Vec3 & a = pc[static_cast<std::size_t>(e[0])];
    const Vec3 & b = pc[static_cast<std::size_t>(e[1])];
    const bool ina = a.z() >= near;
    const bool inb = b.z() >= near;
    if (ina) emit(a);
    if (inb) emit(b);
    if (ina != inb) {
      const double t = (near - a.z()) / (b.z() - a.z());
      emit(a + t * (b - a));
    }
  }
  return convex_hull(std::move(pts));
}

/// Per-camera mask rasterizer. Pixels are owned by the nearest box whose
/// hull touches them, so masks never undershoot the silhouette; an owned pixel survives dropout per a hash of
/// (seed, camera, box, pixel), so coverage of any pixel set is computable
/// without rendering the full image.
class MaskRaster
{
public:
  MaskRaster(const CameraModel & cam, std::size_t camera_index, std::uint64_t seed, double noise)
  : cam_(cam), camera_(camera_index), seed_(seed), noise_(noise)
  {
  }

  void set_boxes(const std::vector<Box3D> & boxes)
  {
    hulls_.clear();
    order_.clear();
    std::vector<std::pair<double, std::size_t>> by_range;
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      hulls_.push_back(projected_hull(boxes[b], cam_));
      by_range.emplace_back((boxes[b].center - cam_.center()).norm(), b);
    }
    std::stable_sort(by_range.begin(), by_range.end(), [](const auto & a, const auto & b) { return a.first < b.first; });
    for (const auto & [range, b] : by_range) {
      order_.push_back(b);
    }
  }

  /// Box owning the pixel before dropout, or -1.
  int owner(int x, int y) const
  {
    for (std::size_t b : order_) {
      if (touches_pixel(hulls_[b], x, y)) {
        return static_cast<int>(b);
      }
    }
    return -1;
  }

  bool kept(int box, int x, int y) const
  {
    if (noise_ <= 0.0) {
      return true;
    }
    const auto pixel = static_cast<std::uint64_t>(y) * static_cast<std::uint64_t>(cam_.width()) + static_cast<std::uint64_t>(x);
    return unit_from_bits(mix_seed(seed_, camera_, static_cast<std::uint64_t>(box), pixel)) >= noise_;
  }

  /// Box of the visible (post-dropout) mask at the pixel, or -1.
  int visible(int x, int y) const
  {
    const int b = owner(x, y);
    return (b >= 0 && kept(b, x, y)) ? b : -1;
  }

  /// Full-resolution masks, one per box with at least one surviving pixel,
  /// in box order. `source` receives the box index of each mask.
  std::vector<InstanceMask> render(const std::vector<Box3D> & boxes, const std::vector<double> & scores, std::vector<int> & source) const
  {
    const int w = cam_.width();
    const int h = cam_.height();
    std::vector<int> vis(static_cast<std::size_t>(w) * h, -1);
    for (std::size_t b = 0; b < hulls_.size(); ++b) {
      const auto & hull = hulls_[b];
      if (hull.size() < 3) {
        continue;
      }
      double x0 = hull[0].x(), x1 = x0, y0 = hull[0].y(), y1 = y0;
      for (const auto & p : hull) {
        x0 = std::min(x0, p.x());
        x1 = std::max(x1, p.x());
        y0 = std::min(y0, p.y());
        y1 = std::max(y1, p.y());
      }
      const int xa = std::max(0, static_cast<int>(std::floor(std::max(-1.0, x0))));
      const int xb = std::min(w - 1, static_cast<int>(std::ceil(std::min(static_cast<double>(w), x1))));
      const int ya = std::max(0, static_cast<int>(std::floor(std::max(-1.0, y0))));
      const int yb = std::min(h - 1, static_cast<int>(std::ceil(std::min(static_cast<double>(h), y1))));
      for (int y = ya; y <= yb; ++y) {
        for (int x = xa; x <= xb; ++x) {
          auto & slot = vis[static_cast<std::size_t>(y) * w + x];
          if (slot == -1 && touches_pixel(hull, x, y)) {
            slot = visible(x, y);
            if (slot == -1) {
              slot = -2;  // resolved: background or dropped
            }
          }
        }
      }
    }
    std::vector<InstanceMask> masks;
    source.clear();
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      InstanceMask m(w, h, boxes[b].category, scores[b]);
      bool any = false;
      for (std::size_t p = 0; p < vis.size(); ++p) {
        if (vis[p] == static_cast<int>(b)) {
          m.bitmap[p] = 1;
          any = true;
        }
      }
      if (any) {
        masks.push_back(std::move(m));
        source.push_back(static_cast<int>(b));
      }
    }
    return masks;
  }

  /// Foreground cell count on a feature grid, sampled exactly as
  /// downscale_masks samples.
  std::size_t foreground_cells(int feature_w, int feature_h) const
  {
    const double su = static_cast<double>(cam_.width()) / feature_w;
    const double sv = static_cast<double>(cam_.height()) / feature_h;
    std::size_t n = 0;
    for (int row = 0; row < feature_h; ++row) {
      const int y = std::min(cam_.height() - 1, static_cast<int>(std::floor((row + 0.5) * sv)));
      for (int col = 0; col < feature_w; ++col) {
        const int x = std::min(cam_.width() - 1, static_cast<int>(std::floor((col + 0.5) * su)));
        n += visible(x, y) >= 0;
      }
    }
    return n;
  }

private:
  const CameraModel & cam_;
  std::uint64_t camera_;
  std::uint64_t seed_;
  double noise_;
  std::vector<std::vector<Point2>> hulls_;
  std::vector<std::size_t> order_;
};

// ---------------------------------------------------------------------------
// Scene synthesis.

namespace detail
{

enum Stream : std::uint64_t { kPlacement = 1, kLidar = 2, kMaskNoise = 3, kFeatures = 4, kScores = 5 };

inline Box3D sample_box(const SceneConfig & cfg, Rng & rng)
{
  Box3D b;
  b.category = static_cast<int>(rng.pick(cfg.category_weights));
  const auto & tmpl = cfg.categories[static_cast<std::size_t>(b.category)];
  const double jitter = rng.uniform(0.9, 1.1);
  b.size = tmpl.size * jitter;
  const double r = rng.uniform(cfg.min_range, cfg.max_range);
  const double az = rng.uniform(-std::numbers::pi, std::numbers::pi);
  b.center = Vec3(r * std::cos(az), r * std::sin(az), b.size.z() / 2.0);
  b.yaw = normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
  b.velocity = Eigen::Vector2d(rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0));
  b.attribute = static_cast<int>(std::floor(rng.uniform(0.0, 3.0)));
  b.score = 1.0;
  return b;
}

inline bool placeable(const SceneConfig & cfg, const Box3D & b, const std::vector<Box3D> & placed)
{
  const double half_diag = 0.5 * std::hypot(b.size.x(), b.size.y());
  if (b.bev_distance() - half_diag < 2.0) {
    return false;
  }
  if (std::abs(b.center.x()) + half_diag > cfg.extent || std::abs(b.center.y()) + half_diag > cfg.extent) {
    return false;
  }
  for (const auto & o : placed) {
    if (footprints_overlap(b, o, 0.5)) {
      return false;
    }
  }
  return true;
}

/// True when the segment origin -> p enters any box before reaching p. A
/// point on a face turned towards the sensor enters its own box at t = 1.
inline bool occluded(const std::vector<Box3D> & boxes, const Vec3 & origin, const Vec3 & p)
{
  constexpr double kSurface = 1e-6;
  for (const auto & box : boxes) {
    if (const auto t = segment_entry(box, origin, p); t && *t < 1.0 - kSurface) {
      return true;
    }
  }
  return false;
}

/// LiDAR returns: points on the side and top faces of each box plus the
/// ground plane, kept only when nothing lies between the sensor and them.
inline void sample_lidar(const SceneConfig & cfg, Scene & scene)
{
  Rng rng(mix_seed(cfg.seed, kLidar));
  const Vec3 & o = cfg.lidar_origin;
  auto add = [&](const Vec3 & p, int src, double intensity) {
    if (occluded(scene.gt_boxes, o, p)) {
      return;
    }
    scene.cloud.push_back({static_cast<float>(p.x()), static_cast<float>(p.y()), static_cast<float>(p.z()), 0.0f, static_cast<float>(intensity)});
    scene.point_source.push_back(src);
  };
  for (std::size_t b = 0; b < scene.gt_boxes.size(); ++b) {
    const Box3D & box = scene.gt_boxes[b];
    const double c = std::cos(box.yaw);
    const double s = std::sin(box.yaw);
    const double L = box.size.y(), W = box.size.x(), H = box.size.z();
    auto to_ego = [&](double lx, double ly, double lz) -> Vec3 {
      return box.center + Vec3(c * lx - s * ly, s * lx + c * ly, lz);
    };
    const double refl = rng.uniform(0.5, 0.9);
    // (face normal axis, sign, extent along the two in-face axes)
    struct Face { int axis; double sign; double a; double b; };
    const Face faces[] = {{0, 1.0, W, H}, {0, -1.0, W, H}, {1, 1.0, L, H}, {1, -1.0, L, H}, {2, 1.0, L, W}};
    for (const Face & f : faces) {
      const std::size_t n = rng.stochastic_round(f.a * f.b * cfg.points_per_m2);
      for (std::size_t k = 0; k < n; ++k) {
        const double u = rng.uniform(-0.5, 0.5);
        const double v = rng.uniform(-0.5, 0.5);
        Vec3 local;
        switch (f.axis) {
          case 0: local = Vec3(f.sign * L / 2.0, u * W, v * H); break;
          case 1: local = Vec3(u * L, f.sign * W / 2.0, v * H); break;
          default: local = Vec3(u * L, v * W, H / 2.0); break;
        }
        add(to_ego(local.x(), local.y(), local.z()), static_cast<int>(b), refl);
      }
    }
  }
  const double side = 2.0 * cfg.extent;
  const std::size_t n_ground = rng.stochastic_round(side * side * cfg.ground_points_per_m2);
  for (std::size_t k = 0; k < n_ground; ++k) {
    const double x = rng.uniform(-cfg.extent, cfg.extent);
    const double y = rng.uniform(-cfg.extent, cfg.extent);
    add(Vec3(x, y, 0.0), -1, rng.uniform(0.05, 0.3));
  }
}

inline double census(std::vector<MaskRaster> & rasters, const std::vector<Box3D> & boxes, int fw, int fh)
{
  double sum = 0.0;
  for (auto & r : rasters) {
    r.set_boxes(boxes);
    sum += static_cast<double>(r.foreground_cells(fw, fh)) / (static_cast<double>(fw) * fh);
  }
  return sum / static_cast<double>(rasters.size());
}

}  // namespace detail

/// Deterministic synthetic scene. With a target foreground fraction, boxes
/// are added one candidate at a time and a candidate is kept only if the
/// rig-mean foreground fraction stays at or below target + tolerance; the
/// process stops once the fraction is within tolerance of the target.
inline Scene synthesize(const SceneConfig & cfg)
{
  cfg.validate();
  Scene scene;
  scene.rig = cfg.rig;
  scene.n_categories = cfg.n_categories();
  scene.feature_w = cfg.feature_w;
  scene.feature_h = cfg.feature_h;

  const std::uint64_t noise_seed = mix_seed(cfg.seed, detail::kMaskNoise);
  std::vector<MaskRaster> rasters;
  for (std::size_t c = 0; c < cfg.rig.size(); ++c) {
    rasters.emplace_back(scene.rig[c], c, noise_seed, cfg.mask_noise);
  }

  Rng place(mix_seed(cfg.seed, detail::kPlacement));
  if (cfg.target_fg_fraction) {
    const double target = *cfg.target_fg_fraction;
    double frac = 0.0;
    int attempts = 0;
    while (std::abs(frac - target) > cfg.fg_tolerance) {
      require(attempts < cfg.max_attempts, "target foreground fraction not reached within the attempt budget");
      ++attempts;
      Box3D cand = detail::sample_box(cfg, place);
      if (!detail::placeable(cfg, cand, scene.gt_boxes)) {
        continue;
      }
      scene.gt_boxes.push_back(cand);
      const double next = detail::census(rasters, scene.gt_boxes, cfg.feature_w, cfg.feature_h);
      if (next > target + cfg.fg_tolerance || next <= frac) {
        scene.gt_boxes.pop_back();
        continue;
      }
      frac = next;
    }
  } else {
    int attempts = 0;
    while (static_cast<int>(scene.gt_boxes.size()) < cfg.n_objects) {
      require(attempts < cfg.max_attempts, "could not place all objects within the attempt budget");
      ++attempts;
      Box3D cand = detail::sample_box(cfg, place);
      if (detail::placeable(cfg, cand, scene.gt_boxes)) {
        scene.gt_boxes.push_back(cand);
      }
    }
  }

  Rng scores(mix_seed(cfg.seed, detail::kScores));
  for (std::size_t b = 0; b < scene.gt_boxes.size(); ++b) {
    scene.mask_scores.push_back(scores.uniform(0.55, 0.99));
  }

  detail::sample_lidar(cfg, scene);

  scene.masks_per_camera.resize(cfg.rig.size());
  scene.mask_source.resize(cfg.rig.size());
  for (std::size_t c = 0; c < cfg.rig.size(); ++c) {
    rasters[c].set_boxes(scene.gt_boxes);
    scene.masks_per_camera[c] = rasters[c].render(scene.gt_boxes, scene.mask_scores, scene.mask_source[c]);
  }

  if (cfg.with_features) {
    for (std::size_t c = 0; c < cfg.rig.size(); ++c) {
      Rng frng(mix_seed(cfg.seed, detail::kFeatures, c));
      FeatureImage img(cfg.feature_channels, cfg.feature_h, cfg.feature_w);
      for (double & v : img.data) {
        // Stored as float32 on disk; keep memory and files identical.
        v = static_cast<float>(frng.uniform(-1.0, 1.0));
      }
      scene.feature_images.push_back(std::move(img));
    }
  }
  return scene;
}

/// Depth along the feature-cell ray to the first box or ground hit, as a
/// normalized Gaussian over depth bins. Rays that hit nothing inside the
/// binned range get a uniform distribution.
inline DepthAttention depth_oracle_attention(const Scene & scene, std::size_t camera, const DepthBinning & bins, double sigma = 1.0)
{
  bins.validate();
  require(camera < scene.rig.size(), "camera index out of range");
  require(sigma > 0.0, "depth spread must be positive");
  const CameraModel & cam = scene.rig[camera];
  const int fw = scene.feature_w;
  const int fh = scene.feature_h;
  DepthAttention att = DepthAttention::filled(fw, fh, bins.count, 0.0, true);
  const Vec3 origin = cam.center();
  for (int row = 0; row < fh; ++row) {
    for (int col = 0; col < fw; ++col) {
      const auto [u, v] = feature_cell_center(col, row, fw, fh, cam);
      const Vec3 far_pt = unproject_from_image(u, v, bins.far(), cam);
      double best_t = 2.0;
      for (const auto & b : scene.gt_boxes) {
        if (const auto t = segment_entry(b, origin, far_pt)) {
          best_t = std::min(best_t, *t);
        }
      }
      if (far_pt.z() < origin.z()) {
        best_t = std::min(best_t, origin.z() / (origin.z() - far_pt.z()));
      }
      const std::size_t p = static_cast<std::size_t>(row) * fw + col;
      double total = 0.0;
      if (best_t <= 1.0) {
        const double depth = best_t * bins.far();
        for (int i = 0; i < bins.count; ++i) {
          const double z = (bins.center(i) - depth) / sigma;
          const double w = std::exp(-0.5 * z * z);
          att.values[p * bins.count + i] = w;
          total += w;
        }
      }
      if (total <= 1e-300) {
        for (int i = 0; i < bins.count; ++i) {
          att.values[p * bins.count + i] = static_cast<float>(1.0 / bins.count);
        }
      } else {
        for (int i = 0; i < bins.count; ++i) {
          att.values[p * bins.count + i] = static_cast<float>(att.values[p * bins.count + i] / total);
        }
      }
    }
  }
  return att;
}

struct Perturbation
{
  double sigma_center = 0.0;  // meters, per BEV axis
  double sigma_size = 0.0;    // relative
  double sigma_yaw = 0.0;     // radians
  double drop_rate = 0.0;
  double fp_rate = 0.0;       // expected false positives per GT box

  void validate() const
  {
    require(sigma_center >= 0.0 && sigma_size >= 0.0 && sigma_yaw >= 0.0, "perturbation magnitudes must be non-negative");
    require(drop_rate >= 0.0 && drop_rate <= 1.0, "drop rate must lie in [0, 1]");
    require(fp_rate >= 0.0, "false positive rate must be non-negative");
  }
};

/// Noisy copies of the GT boxes plus uniform false positives. TP scores are
/// drawn from [0.5, 1], FP scores from [0, 0.6]. Zero perturbation returns
/// the GT boxes unchanged (score 1).
inline std::vector<Box3D> oracle_detections(const Scene & scene, const Perturbation & perturb, std::uint64_t seed, double extent = 54.0, int sample = 0)
{
  perturb.validate();
  Rng rng(seed);
  const bool exact = perturb.sigma_center == 0.0 && perturb.sigma_size == 0.0 && perturb.sigma_yaw == 0.0;
  std::vector<Box3D> out;
  for (const auto & gt : scene.gt_boxes) {
    if (perturb.drop_rate > 0.0 && rng.uniform() < perturb.drop_rate) {
      continue;
    }
    Box3D d = gt;
    d.sample = sample;
    if (!exact) {
      d.center.x() += perturb.sigma_center * rng.normal();
      d.center.y() += perturb.sigma_center * rng.normal();
      for (int k = 0; k < 3; ++k) {
        d.size[k] = std::max(0.05, d.size[k] * (1.0 + perturb.sigma_size * rng.normal()));
      }
      d.yaw = normalize_yaw(d.yaw + perturb.sigma_yaw * rng.normal());
      d.score = rng.uniform(0.5, 1.0);
    }
    out.push_back(d);
  }
  const int n_cat = scene.n_categories;
  for (std::size_t k = 0; k < scene.gt_boxes.size(); ++k) {
    if (perturb.fp_rate <= 0.0 || rng.uniform() >= std::min(1.0, perturb.fp_rate)) {
      continue;
    }
    Box3D fp;
    fp.category = static_cast<int>(std::floor(rng.uniform(0.0, static_cast<double>(std::max(n_cat, 1)))));
    fp.center = Vec3(rng.uniform(-extent, extent), rng.uniform(-extent, extent), 0.8);
    fp.size = Vec3(1.9, 4.6, 1.7);
    fp.yaw = normalize_yaw(rng.uniform(-std::numbers::pi, std::numbers::pi));
    fp.velocity = Eigen::Vector2d::Zero();
    fp.attribute = 0;
    fp.score = rng.uniform(0.0, 0.6);
    fp.sample = sample;
    out.push_back(fp);
  }
  return out;
}

}  // namespace semfuse
