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

// File formats. Binary layouts are little-endian regardless of host; each
// section below gives its layout.

#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "semfuse/bev_fuse.hpp"
#include "semfuse/bev_grid.hpp"
#include "semfuse/common.hpp"
#include "semfuse/eval.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/masks.hpp"
#include "semfuse/paint.hpp"
#include "semfuse/view_transform.hpp"

namespace semfuse::io
{

namespace fs = std::filesystem;
using json = nlohmann::json;

// ---------------------------------------------------------------------------
// Byte helpers.

class ByteWriter
{
public:
  void u32(std::uint32_t v) { put(v, 4); }
  void u64(std::uint64_t v) { put(v, 8); }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(std::string_view s) { bytes_.insert(bytes_.end(), s.begin(), s.end()); }

  const std::vector<char> & bytes() const { return bytes_; }

private:
  void put(std::uint64_t v, int n)
  {
    for (int i = 0; i < n; ++i) {
      bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xFF));
    }
  }

  std::vector<char> bytes_;
};

class ByteReader
{
public:
  ByteReader(std::vector<char> bytes, std::string what) : bytes_(std::move(bytes)), what_(std::move(what)) {}

  std::uint32_t u32() { return static_cast<std::uint32_t>(get(4)); }
  std::uint64_t u64() { return get(8); }
  float f32() { return std::bit_cast<float>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }

  std::string raw(std::size_t n)
  {
    need(n);
    std::string s(bytes_.data() + pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

  void expect_end() const
  {
    if (remaining() != 0) {
      throw ParseError(what_ + ": " + std::to_string(remaining()) + " trailing bytes");
    }
  }

private:
  void need(std::size_t n) const
  {
    if (remaining() < n) {
      throw ParseError(what_ + ": truncated");
    }
  }

  std::uint64_t get(int n)
  {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + static_cast<std::size_t>(i)])) << (8 * i);
    }
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::vector<char> bytes_;
  std::string what_;
  std::size_t pos_ = 0;
};

inline std::vector<char> read_bytes(const fs::path & path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ParseError("cannot open " + path.string());
  }
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline void write_bytes(const fs::path & path, const std::vector<char> & bytes)
{
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

inline std::string read_text(const fs::path & path)
{
  std::ifstream in(path);
  if (!in) {
    throw ParseError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text(const fs::path & path, const std::string & text)
{
  std::ofstream out(path, std::ios::trunc);
  if (!out) {
    throw std::runtime_error("cannot write " + path.string());
  }
  out << text;
  if (!out) {
    throw std::runtime_error("failed writing " + path.string());
  }
}

inline json read_json(const fs::path & path)
{
  try {
    return json::parse(read_text(path));
  } catch (const json::exception & e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

inline void write_json(const fs::path & path, const json & j) { write_text(path, j.dump(2) + "\n"); }

/// Resolves `p` against the directory of the document that referenced it.
inline fs::path resolve(const fs::path & base_dir, const std::string & p)
{
  const fs::path path(p);
  return path.is_absolute() ? path : base_dir / path;
}

/// Runs `fn`, rethrowing JSON access errors as ParseError tagged with `what`.
template <typename Fn>
auto parsing(const std::string & what, Fn && fn) -> decltype(fn())
{
  try {
    return fn();
  } catch (const json::exception & e) {
    throw ParseError(what + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Calibration manifest (JSON).
//
// { "cameras": [ { "name": "CAM_FRONT", "fx": .., "fy": .., "cx": .., "cy": ..,
//                  "width": 704, "height": 256,
//                  "rotation": [w, x, y, z], "translation": [x, y, z] } ] }
// rotation/translation give the camera-from-ego transform.

inline json camera_to_json(const CameraModel & cam)
{
  const auto q = cam.cam_from_ego().quaternion();
  const Vec3 & t = cam.cam_from_ego().translation();
  return {
    {"name", cam.name()}, {"fx", cam.fx()}, {"fy", cam.fy()}, {"cx", cam.cx()}, {"cy", cam.cy()},
    {"width", cam.width()}, {"height", cam.height()},
    {"rotation", {q.w(), q.x(), q.y(), q.z()}}, {"translation", {t.x(), t.y(), t.z()}}};
}

inline CameraModel camera_from_json(const json & j)
{
  return parsing("camera entry", [&] {
    const auto & r = j.at("rotation");
    const auto & t = j.at("translation");
    if (r.size() != 4 || t.size() != 3) {
      throw ParseError("camera entry: rotation needs 4 and translation 3 numbers");
    }
    const auto pose = RigidTransform::from_quaternion(
      r[0].get<double>(), r[1].get<double>(), r[2].get<double>(), r[3].get<double>(),
      Vec3(t[0].get<double>(), t[1].get<double>(), t[2].get<double>()));
    return CameraModel(
      j.at("fx").get<double>(), j.at("fy").get<double>(), j.at("cx").get<double>(), j.at("cy").get<double>(),
      j.at("width").get<int>(), j.at("height").get<int>(), pose, j.value("name", std::string{}));
  });
}

inline json rig_to_json(std::span<const CameraModel> rig)
{
  json cams = json::array();
  for (const auto & c : rig) {
    cams.push_back(camera_to_json(c));
  }
  return {{"cameras", cams}};
}

inline std::vector<CameraModel> rig_from_json(const json & j)
{
  return parsing("calibration", [&] {
    std::vector<CameraModel> rig;
    for (const auto & c : j.at("cameras")) {
      rig.push_back(camera_from_json(c));
    }
    return rig;
  });
}

inline void write_calibration(const fs::path & path, std::span<const CameraModel> rig) { write_json(path, rig_to_json(rig)); }
inline std::vector<CameraModel> read_calibration(const fs::path & path) { return rig_from_json(read_json(path)); }

// ---------------------------------------------------------------------------
// Point cloud (binary).
//
//   char[4] magic "SFPC" | u64 count | u32 version (1) | u32 n_categories
//   count records of f32: x y z t intensity [one_hot[N] score]
// n_categories = 0 marks an unpainted cloud (5 floats per record).

inline constexpr std::uint32_t kCloudVersion = 1;

inline std::vector<char> encode_cloud(std::span<const LidarPoint> points, const SemanticPointCloud * painted = nullptr)
{
  ByteWriter w;
  w.raw("SFPC");
  w.u64(points.size());
  w.u32(kCloudVersion);
  const int n_cat = painted ? painted->n_categories : 0;
  w.u32(static_cast<std::uint32_t>(n_cat));
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto & p = points[i];
    w.f32(p.x);
    w.f32(p.y);
    w.f32(p.z);
    w.f32(p.t);
    w.f32(p.intensity);
    if (painted) {
      for (int c = 0; c < n_cat; ++c) {
        w.f32(painted->one_hot(i, c));
      }
      w.f32(painted->score[i]);
    }
  }
  return w.bytes();
}

inline void write_cloud(const fs::path & path, std::span<const LidarPoint> points) { write_bytes(path, encode_cloud(points)); }

inline void write_painted_cloud(const fs::path & path, const SemanticPointCloud & cloud)
{
  cloud.validate();
  write_bytes(path, encode_cloud(cloud.points, &cloud));
}

/// Reads either layout; unpainted files come back with n_categories 0.
inline SemanticPointCloud decode_cloud(std::vector<char> bytes, const std::string & what = "point cloud")
{
  ByteReader r(std::move(bytes), what);
  if (r.raw(4) != "SFPC") {
    throw ParseError(what + ": bad magic");
  }
  const std::uint64_t count = r.u64();
  if (const auto v = r.u32(); v != kCloudVersion) {
    throw ParseError(what + ": unsupported version " + std::to_string(v));
  }
  const std::uint32_t n_cat = r.u32();
  const std::size_t width = 5 + (n_cat > 0 ? n_cat + 1 : 0);
  if (count > r.remaining() / (4 * width)) {
    throw ParseError(what + ": record count exceeds payload");
  }
  SemanticPointCloud cloud = SemanticPointCloud::unpainted({}, static_cast<int>(n_cat));
  cloud.points.reserve(count);
  for (std::uint64_t i = 0; i < count; ++i) {
    LidarPoint p;
    p.x = r.f32();
    p.y = r.f32();
    p.z = r.f32();
    p.t = r.f32();
    p.intensity = r.f32();
    int cat = -1;
    float score = 0.0f;
    if (n_cat > 0) {
      for (std::uint32_t c = 0; c < n_cat; ++c) {
        const float v = r.f32();
        if (v == 1.0f) {
          if (cat >= 0) {
            throw ParseError(what + ": record has more than one hot category");
          }
          cat = static_cast<int>(c);
        } else if (v != 0.0f) {
          throw ParseError(what + ": one-hot entries must be 0 or 1");
        }
      }
      score = r.f32();
    }
    cloud.points.push_back(p);
    cloud.category.push_back(cat);
    cloud.score.push_back(score);
  }
  r.expect_end();
  try {
    cloud.validate();
  } catch (const ContractError & e) {
    throw ParseError(what + ": " + e.what());
  }
  return cloud;
}

inline SemanticPointCloud read_cloud(const fs::path & path) { return decode_cloud(read_bytes(path), path.string()); }

// ---------------------------------------------------------------------------
// Instance mask (run-length encoded text).
//
//   SFMASK 1
//   <width> <height> <category> <score>
//   <n_runs> <run_0> <run_1> ...
// Runs cover the row-major bitmap and alternate 0, 1, 0, ... starting with
// a (possibly empty) run of zeros.

inline std::string format_double(double v)
{
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string encode_mask(const InstanceMask & m)
{
  m.validate();
  std::vector<std::size_t> runs;
  std::uint8_t current = 0;
  std::size_t len = 0;
  for (auto b : m.bitmap) {
    const std::uint8_t bit = b != 0 ? 1 : 0;
    if (bit != current) {
      runs.push_back(len);
      current = bit;
      len = 0;
    }
    ++len;
  }
  runs.push_back(len);
  std::ostringstream out;
  out << "SFMASK 1\n" << m.width << ' ' << m.height << ' ' << m.category << ' ' << format_double(m.score) << '\n' << runs.size();
  for (auto r : runs) {
    out << ' ' << r;
  }
  out << '\n';
  return out.str();
}

inline InstanceMask decode_mask(const std::string & text, const std::string & what = "mask")
{
  std::istringstream in(text);
  std::string magic;
  int version = 0;
  InstanceMask m;
  std::size_t n_runs = 0;
  if (!(in >> magic >> version) || magic != "SFMASK" || version != 1) {
    throw ParseError(what + ": bad header");
  }
  if (!(in >> m.width >> m.height >> m.category >> m.score >> n_runs)) {
    throw ParseError(what + ": bad mask header fields");
  }
  if (m.width <= 0 || m.height <= 0 || m.category < 0 || !(m.score >= 0.0 && m.score <= 1.0)) {
    throw ParseError(what + ": invalid mask header values");
  }
  const std::size_t total = static_cast<std::size_t>(m.width) * m.height;
  m.bitmap.reserve(total);
  std::uint8_t bit = 0;
  for (std::size_t k = 0; k < n_runs; ++k) {
    std::size_t r = 0;
    if (!(in >> r)) {
      throw ParseError(what + ": truncated run list");
    }
    if (r > total - m.bitmap.size()) {
      throw ParseError(what + ": runs exceed bitmap size");
    }
    m.bitmap.insert(m.bitmap.end(), r, bit);
    bit ^= 1;
  }
  if (m.bitmap.size() != total) {
    throw ParseError(what + ": runs do not cover the bitmap");
  }
  return m;
}

inline void write_mask(const fs::path & path, const InstanceMask & m) { write_text(path, encode_mask(m)); }
inline InstanceMask read_mask(const fs::path & path) { return decode_mask(read_text(path), path.string()); }

/// Mask manifest: { "cameras": [ { "name": .., "masks": ["a.rle", ..] } ] },
/// one entry per camera in rig order, paths relative to the manifest.
inline std::vector<std::vector<InstanceMask>> read_mask_manifest(const fs::path & path)
{
  const json j = read_json(path);
  const fs::path dir = path.parent_path();
  return parsing(path.string(), [&] {
    std::vector<std::vector<InstanceMask>> out;
    for (const auto & cam : j.at("cameras")) {
      auto & list = out.emplace_back();
      for (const auto & f : cam.at("masks")) {
        list.push_back(read_mask(resolve(dir, f.get<std::string>())));
      }
    }
    return out;
  });
}

// ---------------------------------------------------------------------------
// Feature image (binary): "SFFI" | u32 version (1) | u32 C | u32 H | u32 W |
// f32 payload, channel-major.

inline void write_feature_image(const fs::path & path, const FeatureImage & img)
{
  img.validate();
  ByteWriter w;
  w.raw("SFFI");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(img.channels));
  w.u32(static_cast<std::uint32_t>(img.height));
  w.u32(static_cast<std::uint32_t>(img.width));
  for (double v : img.data) {
    w.f32(static_cast<float>(v));
  }
  write_bytes(path, w.bytes());
}

inline FeatureImage read_feature_image(const fs::path & path)
{
  ByteReader r(read_bytes(path), path.string());
  if (r.raw(4) != "SFFI" || r.u32() != 1) {
    throw ParseError(path.string() + ": bad feature image header");
  }
  const auto c = r.u32();
  const auto h = r.u32();
  const auto w = r.u32();
  if (c == 0 || h == 0 || w == 0 || static_cast<std::uint64_t>(c) * h * w != r.remaining() / 4) {
    throw ParseError(path.string() + ": feature image size mismatch");
  }
  FeatureImage img(static_cast<int>(c), static_cast<int>(h), static_cast<int>(w));
  for (double & v : img.data) {
    v = r.f32();
  }
  r.expect_end();
  try {
    img.validate();
  } catch (const ContractError & e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return img;
}

/// { "cameras": [ { "name": .., "file": "features/CAM_FRONT.sff" } ] }
inline std::vector<FeatureImage> read_feature_manifest(const fs::path & path)
{
  const json j = read_json(path);
  const fs::path dir = path.parent_path();
  return parsing(path.string(), [&] {
    std::vector<FeatureImage> out;
    for (const auto & cam : j.at("cameras")) {
      out.push_back(read_feature_image(resolve(dir, cam.at("file").get<std::string>())));
    }
    return out;
  });
}

// ---------------------------------------------------------------------------
// Depth attention (binary): "SFDA" | u32 version (1) | u32 W | u32 H |
// u32 n_bins | u32 normalized | f32 payload, pixel-major.

inline void write_attention(const fs::path & path, const DepthAttention & att)
{
  att.validate();
  ByteWriter w;
  w.raw("SFDA");
  w.u32(1);
  w.u32(static_cast<std::uint32_t>(att.width));
  w.u32(static_cast<std::uint32_t>(att.height));
  w.u32(static_cast<std::uint32_t>(att.n_bins));
  w.u32(att.normalized ? 1 : 0);
  for (double v : att.values) {
    w.f32(static_cast<float>(v));
  }
  write_bytes(path, w.bytes());
}

inline DepthAttention read_attention(const fs::path & path)
{
  ByteReader r(read_bytes(path), path.string());
  if (r.raw(4) != "SFDA" || r.u32() != 1) {
    throw ParseError(path.string() + ": bad depth attention header");
  }
  DepthAttention att;
  att.width = static_cast<int>(r.u32());
  att.height = static_cast<int>(r.u32());
  att.n_bins = static_cast<int>(r.u32());
  att.normalized = r.u32() != 0;
  const std::uint64_t n = static_cast<std::uint64_t>(att.width) * att.height * att.n_bins;
  if (n == 0 || n != r.remaining() / 4) {
    throw ParseError(path.string() + ": depth attention size mismatch");
  }
  att.values.resize(n);
  for (double & v : att.values) {
    v = r.f32();
  }
  r.expect_end();
  try {
    att.validate();
  } catch (const ContractError & e) {
    throw ParseError(path.string() + ": " + e.what());
  }
  return att;
}

/// { "cameras": [ { "name": .., "file": "attention/CAM_FRONT.sfda" } ] }
inline std::vector<DepthAttention> read_attention_manifest(const fs::path & path)
{
  const json j = read_json(path);
  const fs::path dir = path.parent_path();
  return parsing(path.string(), [&] {
    std::vector<DepthAttention> out;
    for (const auto & cam : j.at("cameras")) {
      out.push_back(read_attention(resolve(dir, cam.at("file").get<std::string>())));
    }
    return out;
  });
}

// ---------------------------------------------------------------------------
// BEV grid dump (binary):
//   u32 C | u32 H | u32 W | f64 x_min | f64 x_max | f64 y_min | f64 y_max
//   f32 payload C x H x W, row-major (channel, row, col).

inline std::vector<char> encode_bev(const BevGrid & g)
{
  ByteWriter w;
  w.u32(static_cast<std::uint32_t>(g.channels()));
  w.u32(static_cast<std::uint32_t>(g.rows()));
  w.u32(static_cast<std::uint32_t>(g.cols()));
  w.f64(g.spec.extent.x_min);
  w.f64(g.spec.extent.x_max);
  w.f64(g.spec.extent.y_min);
  w.f64(g.spec.extent.y_max);
  for (double v : g.data) {
    w.f32(static_cast<float>(v));
  }
  return w.bytes();
}

inline void write_bev(const fs::path & path, const BevGrid & g) { write_bytes(path, encode_bev(g)); }

inline BevGrid decode_bev(std::vector<char> bytes, const std::string & what = "BEV dump")
{
  ByteReader r(std::move(bytes), what);
  BevSpec spec;
  spec.channels = static_cast<int>(r.u32());
  spec.rows = static_cast<int>(r.u32());
  spec.cols = static_cast<int>(r.u32());
  spec.extent.x_min = r.f64();
  spec.extent.x_max = r.f64();
  spec.extent.y_min = r.f64();
  spec.extent.y_max = r.f64();
  if (spec.channels <= 0 || spec.rows <= 0 || spec.cols <= 0 || !spec.extent.valid()) {
    throw ParseError(what + ": invalid header");
  }
  if (static_cast<std::uint64_t>(spec.channels) * spec.rows * spec.cols != r.remaining() / 4) {
    throw ParseError(what + ": payload size mismatch");
  }
  BevGrid g(spec);
  for (double & v : g.data) {
    v = r.f32();
  }
  r.expect_end();
  return g;
}

inline BevGrid read_bev(const fs::path & path) { return decode_bev(read_bytes(path), path.string()); }

// ---------------------------------------------------------------------------
// Detections / ground truth (text, one box per line):
//   category score cx cy cz w l h yaw vx vy attribute [sample]
// vx/vy are "nan" when unknown, attribute is -1 when unknown, sample
// defaults to 0. Blank lines and lines starting with '#' are skipped.

inline std::string format_box(const Box3D & b)
{
  std::ostringstream out;
  const auto num = [](double v) { return std::isnan(v) ? std::string("nan") : format_double(v); };
  out << b.category << ' ' << format_double(b.score) << ' ' << format_double(b.center.x()) << ' '
      << format_double(b.center.y()) << ' ' << format_double(b.center.z()) << ' ' << format_double(b.size.x()) << ' '
      << format_double(b.size.y()) << ' ' << format_double(b.size.z()) << ' ' << format_double(b.yaw) << ' '
      << num(b.velocity ? b.velocity->x() : std::nan("")) << ' ' << num(b.velocity ? b.velocity->y() : std::nan("")) << ' '
      << (b.attribute ? *b.attribute : -1) << ' ' << b.sample;
  return out.str();
}

inline std::string encode_boxes(std::span<const Box3D> boxes)
{
  std::string out = "# category score cx cy cz w l h yaw vx vy attribute sample\n";
  for (const auto & b : boxes) {
    out += format_box(b);
    out += '\n';
  }
  return out;
}

inline double parse_number(const std::string & tok, const std::string & where)
{
  if (tok == "nan" || tok == "NaN") {
    return std::numeric_limits<double>::quiet_NaN();
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(tok, &used);
    if (used != tok.size()) {
      throw ParseError(where + ": bad number '" + tok + "'");
    }
    return v;
  } catch (const std::logic_error &) {
    throw ParseError(where + ": bad number '" + tok + "'");
  }
}

inline std::vector<Box3D> decode_boxes(const std::string & text, const std::string & what = "boxes")
{
  std::vector<Box3D> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') {
      continue;
    }
    const std::string where = what + ":" + std::to_string(line_no);
    std::istringstream ls(line);
    std::vector<std::string> tok;
    for (std::string t; ls >> t;) {
      tok.push_back(t);
    }
    if (tok.size() != 12 && tok.size() != 13) {
      throw ParseError(where + ": expected 12 or 13 fields, got " + std::to_string(tok.size()));
    }
    std::vector<double> v;
    for (const auto & t : tok) {
      v.push_back(parse_number(t, where));
    }
    auto as_int = [&](double x) {
      if (!std::isfinite(x) || x != std::floor(x)) {
        throw ParseError(where + ": expected an integer field");
      }
      return static_cast<int>(x);
    };
    Box3D b;
    b.category = as_int(v[0]);
    b.score = v[1];
    b.center = Vec3(v[2], v[3], v[4]);
    b.size = Vec3(v[5], v[6], v[7]);
    b.yaw = normalize_yaw(v[8]);
    if (!std::isnan(v[9]) && !std::isnan(v[10])) {
      b.velocity = Eigen::Vector2d(v[9], v[10]);
    }
    if (const int a = as_int(v[11]); a >= 0) {
      b.attribute = a;
    }
    if (tok.size() == 13) {
      b.sample = as_int(v[12]);
    }
    try {
      b.validate();
    } catch (const ContractError & e) {
      throw ParseError(where + ": " + e.what());
    }
    out.push_back(b);
  }
  return out;
}

inline void write_boxes(const fs::path & path, std::span<const Box3D> boxes) { write_text(path, encode_boxes(boxes)); }
inline std::vector<Box3D> read_boxes(const fs::path & path) { return decode_boxes(read_text(path), path.string()); }

// ---------------------------------------------------------------------------
// JSON configs.

inline json kernel_to_json(const ConvKernel & k)
{
  return {{"out_channels", k.out_channels}, {"in_channels", k.in_channels}, {"size", k.size}, {"weights", k.weights}, {"bias", k.bias}};
}

inline ConvKernel kernel_from_json(const json & j)
{
  return parsing("kernel", [&] {
    ConvKernel k;
    k.out_channels = j.at("out_channels").get<int>();
    k.in_channels = j.at("in_channels").get<int>();
    k.size = j.at("size").get<int>();
    k.weights = j.at("weights").get<std::vector<double>>();
    k.bias = j.at("bias").get<std::vector<double>>();
    return k;
  });
}

inline json combiner_to_json(const SemanticCombiner & c)
{
  return {{"out_channels", c.out_channels}, {"n_categories", c.n_categories}, {"weights", c.weights}, {"bias", c.bias}};
}

inline SemanticCombiner combiner_from_json(const json & j)
{
  return parsing("combiner", [&] {
    SemanticCombiner c;
    c.out_channels = j.at("out_channels").get<int>();
    c.n_categories = j.at("n_categories").get<int>();
    c.weights = j.at("weights").get<std::vector<double>>();
    c.bias = j.at("bias").get<std::vector<double>>();
    return c;
  });
}

inline json extent_to_json(const BevExtent & e) { return json::array({e.x_min, e.x_max, e.y_min, e.y_max}); }

inline BevExtent extent_from_json(const json & j)
{
  if (!j.is_array() || j.size() != 4) {
    throw ParseError("extent must be [x_min, x_max, y_min, y_max]");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>(), j[3].get<double>()};
}

inline json pillar_spec_to_json(const PillarSpec & s)
{
  json layout = json::array();
  for (auto c : s.layout) {
    layout.push_back(std::string(to_string(c)));
  }
  return {{"extent", extent_to_json(s.extent)}, {"z_range", {s.z_min, s.z_max}}, {"rows", s.rows}, {"cols", s.cols},
          {"reduction", std::string(to_string(s.reduction))}, {"layout", layout}};
}

inline PillarSpec pillar_spec_from_json(const json & j)
{
  return parsing("pillar spec", [&] {
    PillarSpec s;
    s.extent = extent_from_json(j.at("extent"));
    const auto & z = j.at("z_range");
    s.z_min = z.at(0).get<double>();
    s.z_max = z.at(1).get<double>();
    s.rows = j.at("rows").get<int>();
    s.cols = j.at("cols").get<int>();
    s.reduction = parse_reduction(j.at("reduction").get<std::string>());
    s.layout.clear();
    for (const auto & c : j.at("layout")) {
      s.layout.push_back(parse_pillar_channel(c.get<std::string>()));
    }
    return s;
  });
}

inline json eval_config_to_json(const EvalConfig & c)
{
  json bins = json::array();
  for (const auto & b : c.range_bins) {
    bins.push_back({b.lo, b.hi});
  }
  return {{"match_thresholds", c.match_thresholds}, {"tp_threshold", c.tp_threshold}, {"range_bins", bins},
          {"recall_floor", c.recall_floor}, {"min_precision_floor", c.min_precision_floor}, {"categories", c.categories}};
}

inline EvalConfig eval_config_from_json(const json & j)
{
  return parsing("eval config", [&] {
    EvalConfig c;
    c.match_thresholds = j.value("match_thresholds", c.match_thresholds);
    c.tp_threshold = j.value("tp_threshold", c.tp_threshold);
    if (j.contains("range_bins")) {
      c.range_bins.clear();
      for (const auto & b : j.at("range_bins")) {
        c.range_bins.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
      }
    }
    c.recall_floor = j.value("recall_floor", c.recall_floor);
    c.min_precision_floor = j.value("min_precision_floor", c.min_precision_floor);
    c.categories = j.value("categories", c.categories);
    return c;
  });
}

inline json binning_to_json(const DepthBinning & b) { return {{"near", b.near}, {"width", b.width}, {"count", b.count}}; }

inline DepthBinning binning_from_json(const json & j)
{
  return parsing("depth bins", [&] {
    DepthBinning b;
    b.near = j.value("near", b.near);
    b.width = j.value("width", b.width);
    b.count = j.value("count", b.count);
    return b;
  });
}

}  // namespace semfuse::io
