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
#include <cstdint>
#include <memory>
#include <span>
#include <vector>

#include "semfuse/bev_grid.hpp"
#include "semfuse/common.hpp"
#include "semfuse/geometry.hpp"
#include "semfuse/masks.hpp"

namespace semfuse
{

/// Pixel-major copy of a feature image (H x W x C) so that every pseudo point
/// of a pixel reads one contiguous row.
struct FeatureTable
{
  int channels = 0;
  std::size_t pixels = 0;
  std::vector<double> values;

  explicit FeatureTable(const FeatureImage & img)
  : channels(img.channels), pixels(img.pixels()), values(img.data.size())
  {
    for (int c = 0; c < img.channels; ++c) {
      for (std::size_t p = 0; p < pixels; ++p) {
        values[p * channels + c] = img.data[static_cast<std::size_t>(c) * pixels + p];
      }
    }
  }

  std::span<const double> row(std::size_t pixel) const
  {
    return {values.data() + pixel * channels, static_cast<std::size_t>(channels)};
  }
};

struct PointSource
{
  std::uint32_t camera = 0;
  std::uint32_t pixel = 0;
  std::uint32_t bin = 0;

  friend bool operator==(const PointSource &, const PointSource &) = default;
};

/// Lifted camera features. Pseudo points of one pixel share that pixel's
/// feature row; depth attention and filtering act on `weights` and on the
/// point list, never on the shared rows.
struct PseudoPointSet
{
  int channels = 0;
  int grid_width = 0;
  int grid_height = 0;
  int n_bins = 0;
  std::vector<std::shared_ptr<const FeatureTable>> tables;  // indexed by camera
  std::vector<Vec3> positions;
  std::vector<double> weights;
  std::vector<PointSource> sources;

  std::size_t size() const { return positions.size(); }
  bool empty() const { return positions.empty(); }

  std::span<const double> feature(std::size_t i) const { return tables[sources[i].camera]->row(sources[i].pixel); }

  double total_weight() const
  {
    double s = 0.0;
    for (double w : weights) {
      s += w;
    }
    return s;
  }

  /// Same grid description and feature tables, no points.
  PseudoPointSet empty_like() const
  {
    PseudoPointSet out;
    out.channels = channels;
    out.grid_width = grid_width;
    out.grid_height = grid_height;
    out.n_bins = n_bins;
    out.tables = tables;
    return out;
  }

  void push(const PseudoPointSet & from, std::size_t i)
  {
    positions.push_back(from.positions[i]);
    weights.push_back(from.weights[i]);
    sources.push_back(from.sources[i]);
  }

  void validate() const
  {
    require(positions.size() == weights.size() && positions.size() == sources.size(), "pseudo point channel length mismatch");
    for (std::size_t i = 0; i < size(); ++i) {
      require(std::isfinite(weights[i]) && weights[i] >= 0.0, "pseudo point weights must be finite and non-negative");
      require(sources[i].camera < tables.size() && tables[sources[i].camera] != nullptr, "pseudo point references a missing feature table");
    }
  }
};

/// Per-pixel weights over depth bins, pixel-major (H x W x n_bins).
struct DepthAttention
{
  int width = 0;
  int height = 0;
  int n_bins = 0;
  bool normalized = false;
  std::vector<double> values;

  double at(std::size_t pixel, int bin) const { return values[pixel * n_bins + bin]; }

  static DepthAttention filled(int w, int h, int n, double value, bool normalized)
  {
    DepthAttention a{w, h, n, normalized, {}};
    a.values.assign(static_cast<std::size_t>(w) * h * n, value);
    return a;
  }

  /// Unit weight everywhere: attending with this reproduces pure mapping.
  static DepthAttention ones(int w, int h, int n) { return filled(w, h, n, 1.0, false); }

  static DepthAttention uniform(int w, int h, int n) { return filled(w, h, n, 1.0 / n, true); }

  static DepthAttention one_hot(int w, int h, int n, int bin)
  {
    DepthAttention a = filled(w, h, n, 0.0, true);
    for (std::size_t p = 0; p < static_cast<std::size_t>(w) * h; ++p) {
      a.values[p * n + bin] = 1.0;
    }
    return a;
  }

  void validate() const
  {
    require(width >= 1 && height >= 1 && n_bins >= 1, "depth attention dimensions must be positive");
    require(values.size() == static_cast<std::size_t>(width) * height * n_bins, "depth attention payload size mismatch");
    for (double v : values) {
      require(std::isfinite(v) && v >= 0.0, "depth attention entries must be finite and non-negative");
    }
    if (normalized) {
      for (std::size_t p = 0; p < static_cast<std::size_t>(width) * height; ++p) {
        double s = 0.0;
        for (int b = 0; b < n_bins; ++b) {
          s += at(p, b);
        }
        require(std::abs(s - 1.0) <= 1e-6, "normalized depth attention must sum to 1 per pixel");
      }
    }
  }
};

/// Mapping: one unit-weight pseudo point per (feature pixel, depth bin),
/// each carrying its pixel's feature vector.
inline PseudoPointSet lift_mapping(
  const FeatureImage & features, const CameraModel & cam, const DepthBinning & bins, std::uint32_t camera_index = 0)
{
  features.validate();
  const auto frustum = generate_frustum(features.width, features.height, cam, bins);
  PseudoPointSet out;
  out.channels = features.channels;
  out.grid_width = features.width;
  out.grid_height = features.height;
  out.n_bins = bins.count;
  out.tables.resize(camera_index + 1);
  out.tables[camera_index] = std::make_shared<const FeatureTable>(features);
  out.positions.reserve(frustum.size());
  out.sources.reserve(frustum.size());
  for (const auto & fp : frustum) {
    out.positions.push_back(fp.position);
    out.sources.push_back({camera_index, static_cast<std::uint32_t>(fp.pixel_index), static_cast<std::uint32_t>(fp.depth_bin)});
  }
  out.weights.assign(frustum.size(), 1.0);
  return out;
}

/// Concatenates per-camera sets that share grid geometry and channel width.
inline PseudoPointSet merge(std::span<const PseudoPointSet> sets)
{
  PseudoPointSet out;
  if (sets.empty()) {
    return out;
  }
  out = sets.front().empty_like();
  for (const auto & s : sets) {
    require(s.channels == out.channels && s.grid_width == out.grid_width && s.grid_height == out.grid_height &&
              s.n_bins == out.n_bins,
      "merged pseudo point sets must share grid geometry and channels");
    if (s.tables.size() > out.tables.size()) {
      out.tables.resize(s.tables.size());
    }
    for (std::size_t c = 0; c < s.tables.size(); ++c) {
      if (s.tables[c] != nullptr) {
        require(out.tables[c] == nullptr || out.tables[c] == s.tables[c], "merged sets disagree on a camera's features");
        out.tables[c] = s.tables[c];
      }
    }
    out.positions.insert(out.positions.end(), s.positions.begin(), s.positions.end());
    out.weights.insert(out.weights.end(), s.weights.begin(), s.weights.end());
    out.sources.insert(out.sources.end(), s.sources.begin(), s.sources.end());
  }
  return out;
}

namespace detail
{

inline void require_grid_match(const PseudoPointSet & pp, int w, int h, const char * what)
{
  require(pp.grid_width == w && pp.grid_height == h, std::string(what) + " does not match the pseudo point source grid");
}

template <typename Lookup>
PseudoPointSet attend(const PseudoPointSet & pp, Lookup && attention_of)
{
  PseudoPointSet out = pp;
  for (std::size_t i = 0; i < pp.size(); ++i) {
    const auto & src = pp.sources[i];
    out.weights[i] = pp.weights[i] * attention_of(src.camera).at(src.pixel, static_cast<int>(src.bin));
  }
  return out;
}

template <typename Keep>
PseudoPointSet keep_if(const PseudoPointSet & pp, Keep && keep)
{
  PseudoPointSet out = pp.empty_like();
  for (std::size_t i = 0; i < pp.size(); ++i) {
    if (keep(i)) {
      out.push(pp, i);
    }
  }
  return out;
}

}  // namespace detail

/// Depth attention: scales each point's weight by alpha(pixel, bin).
/// Positions and shared feature rows are untouched.
inline PseudoPointSet apply_depth_attention(const PseudoPointSet & pp, const DepthAttention & att)
{
  att.validate();
  detail::require_grid_match(pp, att.width, att.height, "depth attention");
  require(att.n_bins == pp.n_bins, "depth attention bin count differs from the pseudo points");
  return detail::attend(pp, [&](std::uint32_t) -> const DepthAttention & { return att; });
}

/// Per-camera attention, indexed by the points' camera index.
inline PseudoPointSet apply_depth_attention(const PseudoPointSet & pp, std::span<const DepthAttention> per_camera)
{
  for (const auto & att : per_camera) {
    att.validate();
    detail::require_grid_match(pp, att.width, att.height, "depth attention");
    require(att.n_bins == pp.n_bins, "depth attention bin count differs from the pseudo points");
  }
  for (const auto & s : pp.sources) {
    require(s.camera < per_camera.size(), "no depth attention for a pseudo point's camera");
  }
  return detail::attend(pp, [&](std::uint32_t cam) -> const DepthAttention & { return per_camera[cam]; });
}

/// Semantic masking: keeps points whose source pixel is foreground with
/// score >= score_threshold.
inline PseudoPointSet semantic_mask_filter(const PseudoPointSet & pp, const SemanticImage & sem, double score_threshold = 0.0)
{
  detail::require_grid_match(pp, sem.width, sem.height, "semantic image");
  return detail::keep_if(pp, [&](std::size_t i) {
    const auto p = pp.sources[i].pixel;
    return sem.foreground[p] != 0 && sem.score[p] >= score_threshold;
  });
}

inline PseudoPointSet semantic_mask_filter(const PseudoPointSet & pp, std::span<const SemanticImage> per_camera, double score_threshold = 0.0)
{
  for (const auto & sem : per_camera) {
    detail::require_grid_match(pp, sem.width, sem.height, "semantic image");
  }
  for (const auto & s : pp.sources) {
    require(s.camera < per_camera.size(), "no semantic image for a pseudo point's camera");
  }
  return detail::keep_if(pp, [&](std::size_t i) {
    const auto & src = pp.sources[i];
    const auto & sem = per_camera[src.camera];
    return sem.foreground[src.pixel] != 0 && sem.score[src.pixel] >= score_threshold;
  });
}

/// Depth-probability filtering: keeps points with alpha(pixel, bin) >=
/// prob_threshold. Weights are passed through (expected to be attended).
inline PseudoPointSet depth_threshold_filter(const PseudoPointSet & pp, const DepthAttention & att, double prob_threshold)
{
  require(att.normalized, "depth threshold filtering needs a normalized attention");
  att.validate();
  detail::require_grid_match(pp, att.width, att.height, "depth attention");
  require(att.n_bins == pp.n_bins, "depth attention bin count differs from the pseudo points");
  return detail::keep_if(pp, [&](std::size_t i) {
    const auto & src = pp.sources[i];
    return att.at(src.pixel, static_cast<int>(src.bin)) >= prob_threshold;
  });
}

inline PseudoPointSet depth_threshold_filter(const PseudoPointSet & pp, std::span<const DepthAttention> per_camera, double prob_threshold)
{
  for (const auto & att : per_camera) {
    require(att.normalized, "depth threshold filtering needs a normalized attention");
    att.validate();
    detail::require_grid_match(pp, att.width, att.height, "depth attention");
    require(att.n_bins == pp.n_bins, "depth attention bin count differs from the pseudo points");
  }
  for (const auto & s : pp.sources) {
    require(s.camera < per_camera.size(), "no depth attention for a pseudo point's camera");
  }
  return detail::keep_if(pp, [&](std::size_t i) {
    const auto & src = pp.sources[i];
    return per_camera[src.camera].at(src.pixel, static_cast<int>(src.bin)) >= prob_threshold;
  });
}

struct PoolResult
{
  BevGrid grid;
  std::size_t pooled = 0;   // points that landed inside the extent
  std::size_t dropped = 0;  // points outside the extent
};

/// Sum pooling onto the BEV plane (z collapsed). Points are grouped by cell
/// with a stable sort and each cell folds its points in input order, so the
/// output is bit-identical for any worker count.
inline PoolResult splat_pool(const PseudoPointSet & pp, const BevSpec & spec)
{
  spec.validate();
  require(pp.empty() || pp.channels == spec.channels, "pseudo point feature width must equal the BEV channel count");
  PoolResult out{BevGrid(spec), 0, 0};
  const auto groups = group_by_cell(pp.size(), out.grid.cells(), [&](std::size_t i) {
    return spec.cell_of(pp.positions[i].x(), pp.positions[i].y());
  });
  out.dropped = groups.dropped;
  out.pooled = groups.items.size();
  const std::size_t channels = static_cast<std::size_t>(spec.channels);
  const std::size_t cells = out.grid.cells();
  parallel_for(cells, [&](std::size_t begin, std::size_t end) {
    std::vector<double> acc(channels);
    for (std::size_t cell = begin; cell < end; ++cell) {
      if (groups.begin(cell) == groups.end(cell)) {
        continue;
      }
      std::fill(acc.begin(), acc.end(), 0.0);
      for (std::size_t k = groups.begin(cell); k < groups.end(cell); ++k) {
        const std::size_t i = groups.items[k];
        const double w = pp.weights[i];
        if (w == 0.0) {
          continue;
        }
        const auto f = pp.feature(i);
        for (std::size_t c = 0; c < channels; ++c) {
          acc[c] += w * f[c];
        }
      }
      for (std::size_t c = 0; c < channels; ++c) {
        out.grid.data[c * cells + cell] = acc[c];
      }
    }
  });
  return out;
}

}  // namespace semfuse
