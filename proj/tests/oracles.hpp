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

// Brute-force reference implementations. They share data types with the
// library but none of its algorithms: every loop here is the direct,
// slow reading of the definition.

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <tuple>
#include <vector>

#include "semfuse/bev_fuse.hpp"
#include "semfuse/eval.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/masks.hpp"
#include "semfuse/paint.hpp"
#include "semfuse/view_transform.hpp"

namespace oracle
{

using semfuse::Vec3;

/// Pinhole projection from the raw rotation/translation entries.
inline std::optional<std::array<double, 3>> project(const Vec3 & p, const semfuse::CameraModel & cam)
{
  const auto & R = cam.cam_from_ego().rotation();
  const auto & t = cam.cam_from_ego().translation();
  double pc[3];
  for (int r = 0; r < 3; ++r) {
    pc[r] = R(r, 0) * p.x() + R(r, 1) * p.y() + R(r, 2) * p.z() + t(r);
  }
  if (pc[2] <= 1e-6) {
    return std::nullopt;
  }
  const double u = cam.fx() * pc[0] / pc[2] + cam.cx();
  const double v = cam.fy() * pc[1] / pc[2] + cam.cy();
  if (u < 0 || u >= cam.width() || v < 0 || v >= cam.height()) {
    return std::nullopt;
  }
  return std::array<double, 3>{u, v, pc[2]};
}

/// Downscale: for each feature cell, list every instance covering the
/// sampled pixel and keep the best by explicit comparison.
inline semfuse::SemanticImage downscale(const std::vector<semfuse::InstanceMask> & masks, int fw, int fh)
{
  semfuse::SemanticImage sem(fw, fh);
  if (masks.empty()) {
    return sem;
  }
  const int w = masks.front().width;
  const int h = masks.front().height;
  for (int row = 0; row < fh; ++row) {
    for (int col = 0; col < fw; ++col) {
      const int x = std::min(w - 1, static_cast<int>(std::floor((col + 0.5) * (w / static_cast<double>(fw)))));
      const int y = std::min(h - 1, static_cast<int>(std::floor((row + 0.5) * (h / static_cast<double>(fh)))));
      int best = -1;
      for (std::size_t k = 0; k < masks.size(); ++k) {
        if (!masks[k].at(x, y)) continue;
        if (best < 0) {
          best = static_cast<int>(k);
          continue;
        }
        const auto & b = masks[static_cast<std::size_t>(best)];
        if (masks[k].score > b.score || (masks[k].score == b.score && masks[k].category < b.category)) {
          best = static_cast<int>(k);
        }
      }
      if (best >= 0) {
        const std::size_t p = static_cast<std::size_t>(row) * fw + col;
        sem.category[p] = masks[static_cast<std::size_t>(best)].category;
        sem.score[p] = masks[static_cast<std::size_t>(best)].score;
        sem.foreground[p] = 1;
      }
    }
  }
  return sem;
}

/// Painting: every (camera, instance) pair is a candidate; the winner has
/// the largest score, then smallest category, then smallest camera, then
/// smallest instance index.
inline std::pair<int, float> paint_one(
  const semfuse::LidarPoint & lp, const std::vector<semfuse::CameraModel> & rig,
  const std::vector<std::vector<semfuse::InstanceMask>> & masks)
{
  struct Cand { double score; int cat; std::size_t cam; std::size_t idx; };
  std::vector<Cand> cands;
  for (std::size_t c = 0; c < rig.size(); ++c) {
    const auto uv = project(Vec3(lp.x, lp.y, lp.z), rig[c]);
    if (!uv) {
      continue;
    }
    const int x = static_cast<int>(std::floor((*uv)[0]));
    const int y = static_cast<int>(std::floor((*uv)[1]));
    for (std::size_t k = 0; k < masks[c].size(); ++k) {
      const auto & m = masks[c][k];
      if (m.bitmap[static_cast<std::size_t>(y) * m.width + x] && static_cast<float>(m.score) > 0.0f) {
        cands.push_back({m.score, m.category, c, k});
      }
    }
  }
  if (cands.empty()) {
    return {-1, 0.0f};
  }
  std::sort(cands.begin(), cands.end(), [](const Cand & a, const Cand & b) {
    return std::tie(b.score, a.cat, a.cam, a.idx) < std::tie(a.score, b.cat, b.cam, b.idx);
  });
  return {cands.front().cat, static_cast<float>(cands.front().score)};
}

/// Pillar oracle: for every cell, scan the whole cloud.
inline semfuse::BevGrid pillarize(const semfuse::SemanticPointCloud & cloud, const semfuse::PillarSpec & spec)
{
  const int n_cat = cloud.n_categories;
  semfuse::BevGrid g(spec.bev_spec(n_cat));
  const double cw = (spec.extent.x_max - spec.extent.x_min) / spec.cols;
  const double ch = (spec.extent.y_max - spec.extent.y_min) / spec.rows;
  for (int r = 0; r < spec.rows; ++r) {
    for (int c = 0; c < spec.cols; ++c) {
      std::vector<std::size_t> in;
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        const auto & p = cloud.points[i];
        if (p.z < spec.z_min || p.z > spec.z_max || p.x < spec.extent.x_min || p.x >= spec.extent.x_max ||
            p.y < spec.extent.y_min || p.y >= spec.extent.y_max) {
          continue;
        }
        if (static_cast<int>(std::floor((p.x - spec.extent.x_min) / cw)) == c &&
            static_cast<int>(std::floor((p.y - spec.extent.y_min) / ch)) == r) {
          in.push_back(i);
        }
      }
      if (in.empty()) {
        continue;
      }
      int chan = 0;
      for (auto kind : spec.layout) {
        using semfuse::PillarChannel;
        if (kind == PillarChannel::kCount) {
          g.at(chan++, r, c) = static_cast<double>(in.size());
        } else if (kind == PillarChannel::kMeanZ) {
          double s = 0;
          for (auto i : in) s += cloud.points[i].z;
          g.at(chan++, r, c) = s / in.size();
        } else if (kind == PillarChannel::kMeanIntensity) {
          double s = 0;
          for (auto i : in) s += cloud.points[i].intensity;
          g.at(chan++, r, c) = s / in.size();
        } else if (kind == PillarChannel::kMaxScore) {
          double m = 0;
          for (auto i : in) m = std::max(m, static_cast<double>(cloud.score[i]));
          g.at(chan++, r, c) = m;
        } else {
          for (int k = 0; k < n_cat; ++k) {
            std::vector<double> onehot;
            for (auto i : in) onehot.push_back(cloud.category[i] == k ? 1.0 : 0.0);
            double v = 0;
            switch (spec.reduction) {
              case semfuse::Reduction::kSum: for (double x : onehot) v += x; break;
              case semfuse::Reduction::kMean: for (double x : onehot) v += x; v /= onehot.size(); break;
              case semfuse::Reduction::kMax: v = *std::max_element(onehot.begin(), onehot.end()); break;
            }
            g.at(chan++, r, c) = v;
          }
        }
      }
    }
  }
  return g;
}

/// Sequential splat: walk the points once and add into the owning cell.
inline std::vector<double> splat(const semfuse::PseudoPointSet & pp, const semfuse::BevSpec & spec)
{
  std::vector<double> g(static_cast<std::size_t>(spec.channels) * spec.rows * spec.cols, 0.0);
  const double cw = (spec.extent.x_max - spec.extent.x_min) / spec.cols;
  const double chh = (spec.extent.y_max - spec.extent.y_min) / spec.rows;
  for (std::size_t i = 0; i < pp.size(); ++i) {
    const auto & p = pp.positions[i];
    if (p.x() < spec.extent.x_min || p.x() >= spec.extent.x_max || p.y() < spec.extent.y_min || p.y() >= spec.extent.y_max) {
      continue;
    }
    const int c = static_cast<int>(std::floor((p.x() - spec.extent.x_min) / cw));
    const int r = static_cast<int>(std::floor((p.y() - spec.extent.y_min) / chh));
    const auto f = pp.feature(i);
    for (int k = 0; k < spec.channels; ++k) {
      g[(static_cast<std::size_t>(k) * spec.rows + r) * spec.cols + c] += pp.weights[i] * f[static_cast<std::size_t>(k)];
    }
  }
  return g;
}

/// Direct cross-correlation with explicit bounds checks.
inline semfuse::BevGrid conv(const semfuse::BevGrid & in, const semfuse::ConvKernel & k)
{
  semfuse::BevSpec spec = in.spec;
  spec.channels = k.out_channels;
  semfuse::BevGrid out(spec);
  const int h = k.size / 2;
  for (int o = 0; o < k.out_channels; ++o) {
    for (int r = 0; r < in.rows(); ++r) {
      for (int c = 0; c < in.cols(); ++c) {
        double s = k.bias[static_cast<std::size_t>(o)];
        for (int i = 0; i < k.in_channels; ++i) {
          for (int dy = 0; dy < k.size; ++dy) {
            for (int dx = 0; dx < k.size; ++dx) {
              const int rr = r + dy - h;
              const int cc = c + dx - h;
              if (rr >= 0 && rr < in.rows() && cc >= 0 && cc < in.cols()) {
                s += k.w(o, i, dy, dx) * in.at(i, rr, cc);
              }
            }
          }
        }
        out.at(o, r, c) = s;
      }
    }
  }
  return out;
}

/// Channel concatenation, materialized.
inline semfuse::BevGrid concat(const semfuse::BevGrid & a, const semfuse::BevGrid & b)
{
  semfuse::BevSpec spec = a.spec;
  spec.channels = a.channels() + b.channels();
  semfuse::BevGrid out(spec);
  std::copy(a.data.begin(), a.data.end(), out.data.begin());
  std::copy(b.data.begin(), b.data.end(), out.data.begin() + static_cast<std::ptrdiff_t>(a.data.size()));
  return out;
}

/// Greedy matching by exhaustive search over the score order.
inline std::vector<int> greedy_match(const std::vector<semfuse::Box3D> & dets, const std::vector<semfuse::Box3D> & gts, double th)
{
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  // Insertion sort, descending score, stable.
  for (std::size_t i = 1; i < order.size(); ++i) {
    for (std::size_t j = i; j > 0 && dets[order[j]].score > dets[order[j - 1]].score; --j) {
      std::swap(order[j], order[j - 1]);
    }
  }
  std::vector<int> match(dets.size(), -1);
  std::vector<bool> used(gts.size(), false);
  for (auto d : order) {
    double best = std::numeric_limits<double>::infinity();
    int bi = -1;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (used[g] || gts[g].sample != dets[d].sample) continue;
      const double dist = std::sqrt(std::pow(dets[d].center.x() - gts[g].center.x(), 2) + std::pow(dets[d].center.y() - gts[g].center.y(), 2));
      if (dist < best) {
        best = dist;
        bi = static_cast<int>(g);
      }
    }
    if (bi >= 0 && best < th) {
      used[static_cast<std::size_t>(bi)] = true;
      match[d] = bi;
    }
  }
  return match;
}

/// PR curve by operating points, then precision at recall r read off the
/// piecewise-linear curve through (recall_i, precision_i). Below the first
/// recall it is the first precision, beyond the last it is 0.
inline double ap(const std::vector<semfuse::Box3D> & dets, const std::vector<semfuse::Box3D> & gts, double th,
                 double recall_floor = 0.1, double precision_floor = 0.1)
{
  if (gts.empty() || dets.empty()) return 0.0;
  const auto match = greedy_match(dets, gts, th);
  std::vector<std::size_t> order(dets.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return dets[a].score > dets[b].score; });
  std::vector<double> rec, prec;
  int tp = 0, fp = 0;
  for (auto d : order) {
    (match[d] >= 0 ? tp : fp)++;
    rec.push_back(static_cast<double>(tp) / gts.size());
    prec.push_back(static_cast<double>(tp) / (tp + fp));
  }
  double total = 0.0;
  int n = 0;
  for (int k = 0; k <= 100; ++k) {
    const double r = k / 100.0;
    // Linear scan: last operating point at or below r.
    double p = 0.0;
    if (r < rec.front()) {
      p = prec.front();
    } else if (r <= rec.back()) {
      std::size_t j = 0;
      for (std::size_t i = 0; i < rec.size(); ++i) {
        if (rec[i] <= r) j = i;
      }
      p = (j + 1 == rec.size() || rec[j] == r) ? prec[j] : prec[j] + (prec[j + 1] - prec[j]) * (r - rec[j]) / (rec[j + 1] - rec[j]);
    }
    if (k > static_cast<int>(std::lround(recall_floor * 100))) {
      total += std::max(0.0, (p - precision_floor) / (1.0 - precision_floor));
      ++n;
    }
  }
  return total / n;
}

}  // namespace oracle
