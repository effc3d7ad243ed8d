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
#include <Eigen/Geometry>

#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "semfuse/common.hpp"

namespace semfuse
{

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

/// Proper rigid motion x -> R x + t. The rotation is validated to be
/// orthonormal with determinant +1 at construction.
class RigidTransform
{
public:
  static constexpr double kTolerance = 1e-9;

  RigidTransform() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

  RigidTransform(const Mat3 & rotation, const Vec3 & translation)
  : rotation_(rotation), translation_(translation)
  {
    require(rotation_.allFinite() && translation_.allFinite(), "rigid transform must be finite");
    const double ortho = (rotation_.transpose() * rotation_ - Mat3::Identity()).cwiseAbs().maxCoeff();
    require(ortho <= kTolerance, "rotation is not orthonormal");
    require(std::abs(rotation_.determinant() - 1.0) <= kTolerance, "rotation determinant is not +1");
  }

  /// Builds a transform from a (w, x, y, z) quaternion; the quaternion is
  /// normalized first.
  static RigidTransform from_quaternion(double w, double x, double y, double z, const Vec3 & translation)
  {
    Eigen::Quaterniond q(w, x, y, z);
    require(q.norm() > 1e-12, "quaternion has zero norm");
    q.normalize();
    return RigidTransform(q.toRotationMatrix(), translation);
  }

  const Mat3 & rotation() const { return rotation_; }
  const Vec3 & translation() const { return translation_; }

  Vec3 apply(const Vec3 & p) const { return rotation_ * p + translation_; }

  /// (this * other)(p) = this(other(p)).
  RigidTransform compose(const RigidTransform & other) const
  {
    RigidTransform out;
    out.rotation_ = rotation_ * other.rotation_;
    out.translation_ = rotation_ * other.translation_ + translation_;
    return out;
  }

  RigidTransform inverse() const
  {
    RigidTransform out;
    out.rotation_ = rotation_.transpose();
    out.translation_ = -(out.rotation_ * translation_);
    return out;
  }

  Eigen::Quaterniond quaternion() const { return Eigen::Quaterniond(rotation_); }

private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// Pinhole camera: intrinsics plus the camera-from-ego extrinsic.
/// Camera frame convention: +z forward (optical axis), +x right, +y down.
class CameraModel
{
public:
  CameraModel(
    double fx, double fy, double cx, double cy, int width, int height,
    const RigidTransform & cam_from_ego, std::string name = {})
  : fx_(fx), fy_(fy), cx_(cx), cy_(cy), width_(width), height_(height),
    cam_from_ego_(cam_from_ego), ego_from_cam_(cam_from_ego.inverse()), name_(std::move(name))
  {
    require(width > 0 && height > 0, "camera image size must be positive");
    require(fx > 0.0 && fy > 0.0, "focal lengths must be positive");
    require(cx > 0.0 && cx < width && cy > 0.0 && cy < height, "principal point must lie inside the image");
  }

  double fx() const { return fx_; }
  double fy() const { return fy_; }
  double cx() const { return cx_; }
  double cy() const { return cy_; }
  int width() const { return width_; }
  int height() const { return height_; }
  const RigidTransform & cam_from_ego() const { return cam_from_ego_; }
  const RigidTransform & ego_from_cam() const { return ego_from_cam_; }
  const std::string & name() const { return name_; }

  /// Camera center in the ego frame.
  Vec3 center() const { return ego_from_cam_.translation(); }

private:
  double fx_, fy_, cx_, cy_;
  int width_, height_;
  RigidTransform cam_from_ego_;
  RigidTransform ego_from_cam_;
  std::string name_;
};

/// Uniform depth discretization along camera rays. Samples sit at bin
/// centers near + (i + 0.5) * width.
struct DepthBinning
{
  double near = 1.0;
  double width = 0.5;
  int count = 118;

  void validate() const
  {
    require(near > 0.0 && width > 0.0 && count >= 1, "depth binning needs near > 0, width > 0, count >= 1");
  }

  double center(int i) const { return near + (static_cast<double>(i) + 0.5) * width; }
  double far() const { return near + static_cast<double>(count) * width; }
};

struct ImagePoint
{
  double u;
  double v;
  double depth;
};

inline constexpr double kMinProjectionDepth = 1e-6;

/// Pinhole projection of an ego-frame point. Empty when the point is behind
/// (or on) the image plane or lands outside [0, width) x [0, height).
inline std::optional<ImagePoint> project_to_image(const Vec3 & p_ego, const CameraModel & cam)
{
  const Vec3 pc = cam.cam_from_ego().apply(p_ego);
  if (!(pc.z() > kMinProjectionDepth)) {
    return std::nullopt;
  }
  const double u = cam.fx() * pc.x() / pc.z() + cam.cx();
  const double v = cam.fy() * pc.y() / pc.z() + cam.cy();
  if (!(u >= 0.0 && u < cam.width() && v >= 0.0 && v < cam.height())) {
    return std::nullopt;
  }
  return ImagePoint{u, v, pc.z()};
}

inline Vec3 unproject_from_image(double u, double v, double depth, const CameraModel & cam)
{
  require(depth > 0.0, "unproject depth must be positive");
  const Vec3 pc((u - cam.cx()) / cam.fx() * depth, (v - cam.cy()) / cam.fy() * depth, depth);
  return cam.ego_from_cam().apply(pc);
}

struct FrustumPoint
{
  int pixel_index;  // row-major index into the feature grid
  int depth_bin;
  Vec3 position;    // ego frame, meters
};

/// Image-plane center of feature cell (row, col) when a feature_w x feature_h
/// grid covers the image with uniform stride.
inline std::pair<double, double> feature_cell_center(int col, int row, int feature_w, int feature_h, const CameraModel & cam)
{
  const double stride_u = static_cast<double>(cam.width()) / feature_w;
  const double stride_v = static_cast<double>(cam.height()) / feature_h;
  return {(col + 0.5) * stride_u, (row + 0.5) * stride_v};
}

/// One ego-frame sample per (feature cell, depth bin), row-major over cells,
/// ascending depth within a cell.
inline std::vector<FrustumPoint> generate_frustum(int feature_w, int feature_h, const CameraModel & cam, const DepthBinning & bins)
{
  require(feature_w >= 1 && feature_h >= 1, "feature grid dimensions must be positive");
  bins.validate();
  std::vector<FrustumPoint> out;
  out.reserve(static_cast<std::size_t>(feature_w) * feature_h * bins.count);
  for (int row = 0; row < feature_h; ++row) {
    for (int col = 0; col < feature_w; ++col) {
      const auto [u, v] = feature_cell_center(col, row, feature_w, feature_h, cam);
      const int pixel = row * feature_w + col;
      for (int i = 0; i < bins.count; ++i) {
        out.push_back({pixel, i, unproject_from_image(u, v, bins.center(i), cam)});
      }
    }
  }
  return out;
}

/// Camera whose optical axis points along ego heading `yaw` (radians, CCW
/// from +x) from `position`, level with the ground plane.
inline RigidTransform look_along_yaw(double yaw, const Vec3 & position)
{
  // ego axes: x forward, y left, z up. camera axes: z forward, x right, y down.
  const Vec3 forward(std::cos(yaw), std::sin(yaw), 0.0);
  const Vec3 right(std::sin(yaw), -std::cos(yaw), 0.0);
  const Vec3 down(0.0, 0.0, -1.0);
  Mat3 cam_from_ego_rot;
  cam_from_ego_rot.row(0) = right.transpose();
  cam_from_ego_rot.row(1) = down.transpose();
  cam_from_ego_rot.row(2) = forward.transpose();
  return RigidTransform(cam_from_ego_rot, -(cam_from_ego_rot * position));
}

}  // namespace semfuse
