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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "semfuse/bev_grid.hpp"
#include "semfuse/common.hpp"
#include "semfuse/paint.hpp"

namespace semfuse
{

enum class Reduction { kSum, kMean, kMax };

enum class PillarChannel { kCount, kMeanZ, kMeanIntensity, kCategoryHistogram, kMaxScore };

inline std::string_view to_string(Reduction r)
{
  switch (r) {
    case Reduction::kSum: return "sum";
    case Reduction::kMean: return "mean";
    case Reduction::kMax: return "max";
  }
  return "?";
}

inline Reduction parse_reduction(std::string_view s)
{
  if (s == "sum") return Reduction::kSum;
  if (s == "mean") return Reduction::kMean;
  if (s == "max") return Reduction::kMax;
  throw ParseError("unknown reduction '" + std::string(s) + "'");
}

inline std::string_view to_string(PillarChannel c)
{
  switch (c) {
    case PillarChannel::kCount: return "count";
    case PillarChannel::kMeanZ: return "mean_z";
    case PillarChannel::kMeanIntensity: return "mean_intensity";
    case PillarChannel::kCategoryHistogram: return "category_histogram";
    case PillarChannel::kMaxScore: return "max_score";
  }
  return "?";
}

inline PillarChannel parse_pillar_channel(std::string_view s)
{
  if (s == "count") return PillarChannel::kCount;
  if (s == "mean_z") return PillarChannel::kMeanZ;
  if (s == "mean_intensity") return PillarChannel::kMeanIntensity;
  if (s == "category_histogram") return PillarChannel::kCategoryHistogram;
  if (s == "max_score") return PillarChannel::kMaxScore;
  throw ParseError("unknown pillar channel '" + std::string(s) + "'");
}

/// Pillar featurizer configuration.
///
/// Channel semantics per pillar:
///   count               number of points
///   mean_z              mean point height
///   mean_intensity      mean intensity
///   category_histogram  N channels; the one-hot category vectors reduced
///                       with `reduction` (sum: counts, mean: fractions,
///                       max: presence)
///   max_score           largest painted score (0 when none)
/// The named channels fix their own reduction; `reduction` applies to the
/// histogram block only.
struct PillarSpec
{
  BevExtent extent;
  double z_min = -2.0;
  double z_max = 6.0;
  int rows = 180;
  int cols = 180;
  Reduction reduction = Reduction::kSum;
  std::vector<PillarChannel> layout{
    PillarChannel::kCount, PillarChannel::kMeanZ, PillarChannel::kMeanIntensity,
    PillarChannel::kCategoryHistogram, PillarChannel::kMaxScore};

  void validate() const
  {
    require(extent.valid() && z_max > z_min, "pillar extent must be nonempty");
    require(rows >= 1 && cols >= 1, "pillar grid dimensions must be positive");
    require(!layout.empty(), "pillar layout must list at least one channel");
  }

  int channel_count(int n_categories) const
  {
    int n = 0;
    for (auto c : layout) {
      n += c == PillarChannel::kCategoryHistogram ? n_categories : 1;
    }
    return n;
  }

  BevSpec bev_spec(int n_categories) const { return BevSpec{extent, rows, cols, channel_count(n_categories)}; }
};

struct PillarResult
{
  BevGrid grid;
  std::size_t dropped = 0;
};

/// Deterministic pillar encoding of a semantic cloud. Points outside the
/// (x, y, z) extent are dropped and counted; empty pillars stay zero.
inline PillarResult pillarize(const SemanticPointCloud & cloud, const PillarSpec & spec)
{
  spec.validate();
  cloud.validate();
  const int n_cat = cloud.n_categories;
  const BevSpec bev = spec.bev_spec(n_cat);
  PillarResult out{BevGrid(bev), 0};
  const auto groups = group_by_cell(cloud.size(), out.grid.cells(), [&](std::size_t i) -> std::optional<std::size_t> {
    const auto & p = cloud.points[i];
    if (!(p.z >= spec.z_min && p.z <= spec.z_max)) {
      return std::nullopt;
    }
    return bev.cell_of(p.x, p.y);
  });
  out.dropped = groups.dropped;

  parallel_for(out.grid.cells(), [&](std::size_t begin, std::size_t end) {
    std::vector<double> hist(static_cast<std::size_t>(std::max(n_cat, 0)));
    for (std::size_t cell = begin; cell < end; ++cell) {
      const std::size_t n = groups.end(cell) - groups.begin(cell);
      if (n == 0) {
        continue;
      }
      double sum_z = 0.0;
      double sum_i = 0.0;
      double max_score = 0.0;
      std::fill(hist.begin(), hist.end(), 0.0);
      for (std::size_t k = groups.begin(cell); k < groups.end(cell); ++k) {
        const std::size_t i = groups.items[k];
        sum_z += cloud.points[i].z;
        sum_i += cloud.points[i].intensity;
        max_score = std::max(max_score, static_cast<double>(cloud.score[i]));
        if (const int c = cloud.category[i]; c >= 0) {
          if (spec.reduction == Reduction::kMax) {
            hist[static_cast<std::size_t>(c)] = 1.0;
          } else {
            hist[static_cast<std::size_t>(c)] += 1.0;
          }
        }
      }
      const double count = static_cast<double>(n);
      int ch = 0;
      for (auto kind : spec.layout) {
        switch (kind) {
          case PillarChannel::kCount: out.grid.at(ch++, cell) = count; break;
          case PillarChannel::kMeanZ: out.grid.at(ch++, cell) = sum_z / count; break;
          case PillarChannel::kMeanIntensity: out.grid.at(ch++, cell) = sum_i / count; break;
          case PillarChannel::kMaxScore: out.grid.at(ch++, cell) = max_score; break;
          case PillarChannel::kCategoryHistogram:
            for (int c = 0; c < n_cat; ++c) {
              const double h = hist[static_cast<std::size_t>(c)];
              out.grid.at(ch++, cell) = spec.reduction == Reduction::kMean ? h / count : h;
            }
            break;
        }
      }
    }
  });
  return out;
}

/// Single 2D convolution layer, weights laid out out x in x k x k.
struct ConvKernel
{
  int out_channels = 0;
  int in_channels = 0;
  int size = 1;
  std::vector<double> weights;
  std::vector<double> bias;

  static ConvKernel zeros(int out, int in, int k)
  {
    ConvKernel kern{out, in, k, {}, {}};
    kern.weights.assign(static_cast<std::size_t>(out) * in * k * k, 0.0);
    kern.bias.assign(static_cast<std::size_t>(out), 0.0);
    return kern;
  }

  /// 1x1 kernel passing input channel c to output channel c.
  static ConvKernel identity(int channels)
  {
    ConvKernel kern = zeros(channels, channels, 1);
    for (int c = 0; c < channels; ++c) {
      kern.w(c, c, 0, 0) = 1.0;
    }
    return kern;
  }

  double & w(int o, int i, int dy, int dx)
  {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * size + dy) * size + dx];
  }
  double w(int o, int i, int dy, int dx) const
  {
    return weights[((static_cast<std::size_t>(o) * in_channels + i) * size + dy) * size + dx];
  }

  void validate() const
  {
    require(out_channels >= 1 && in_channels >= 1, "kernel channel counts must be positive");
    require(size >= 1 && size % 2 == 1, "kernel size must be odd");
    require(weights.size() == static_cast<std::size_t>(out_channels) * in_channels * size * size, "kernel weight shape mismatch");
    require(bias.size() == static_cast<std::size_t>(out_channels), "kernel bias shape mismatch");
    for (double v : weights) {
      require(std::isfinite(v), "kernel weights must be finite");
    }
    for (double v : bias) {
      require(std::isfinite(v), "kernel bias must be finite");
    }
  }

  /// Zero-pads the spatial window to a larger odd size, keeping it centered.
  ConvKernel padded_to(int new_size) const
  {
    require(new_size >= size && new_size % 2 == 1, "kernel can only grow to a larger odd size");
    ConvKernel out = zeros(out_channels, in_channels, new_size);
    out.bias = bias;
    const int off = (new_size - size) / 2;
    for (int o = 0; o < out_channels; ++o) {
      for (int i = 0; i < in_channels; ++i) {
        for (int dy = 0; dy < size; ++dy) {
          for (int dx = 0; dx < size; ++dx) {
            out.w(o, i, dy + off, dx + off) = w(o, i, dy, dx);
          }
        }
      }
    }
    return out;
  }
};

/// The kernel on concatenated inputs [a | b] that reproduces
/// conv(a, ka) + conv(b, kb): weights side by side along the input axis,
/// biases summed.
inline ConvKernel concat_input_kernels(const ConvKernel & ka, const ConvKernel & kb)
{
  ka.validate();
  kb.validate();
  require(ka.out_channels == kb.out_channels, "stacked kernels must agree on output channels");
  const int k = std::max(ka.size, kb.size);
  const ConvKernel a = ka.padded_to(k);
  const ConvKernel b = kb.padded_to(k);
  ConvKernel out = ConvKernel::zeros(a.out_channels, a.in_channels + b.in_channels, k);
  for (int o = 0; o < out.out_channels; ++o) {
    out.bias[static_cast<std::size_t>(o)] = a.bias[static_cast<std::size_t>(o)] + b.bias[static_cast<std::size_t>(o)];
    for (int dy = 0; dy < k; ++dy) {
      for (int dx = 0; dx < k; ++dx) {
        for (int i = 0; i < a.in_channels; ++i) {
          out.w(o, i, dy, dx) = a.w(o, i, dy, dx);
        }
        for (int i = 0; i < b.in_channels; ++i) {
          out.w(o, a.in_channels + i, dy, dx) = b.w(o, i, dy, dx);
        }
      }
    }
  }
  return out;
}

namespace detail
{

/// Accumulates the cross-correlation of `in` (zero padded) into `out`
/// without bias. `in_offset` selects the kernel's input-channel block.
inline void correlate_into(const BevGrid & in, const ConvKernel & kern, int in_offset, BevGrid & out)
{
  const int rows = in.rows();
  const int cols = in.cols();
  const int half = kern.size / 2;
  parallel_for(static_cast<std::size_t>(kern.out_channels), [&](std::size_t ob, std::size_t oe) {
    for (int o = static_cast<int>(ob); o < static_cast<int>(oe); ++o) {
      for (int i = 0; i < in.channels(); ++i) {
        for (int dy = 0; dy < kern.size; ++dy) {
          for (int dx = 0; dx < kern.size; ++dx) {
            const double wt = kern.w(o, in_offset + i, dy, dx);
            if (wt == 0.0) {
              continue;
            }
            const int sy = dy - half;
            const int sx = dx - half;
            const int r0 = std::max(0, -sy);
            const int r1 = std::min(rows, rows - sy);
            const int c0 = std::max(0, -sx);
            const int c1 = std::min(cols, cols - sx);
            for (int r = r0; r < r1; ++r) {
              const double * src = &in.data[(static_cast<std::size_t>(i) * rows + (r + sy)) * cols];
              double * dst = &out.data[(static_cast<std::size_t>(o) * rows + r) * cols];
              for (int c = c0; c < c1; ++c) {
                dst[c] += wt * src[c + sx];
              }
            }
          }
        }
      }
    }
  });
}

inline BevGrid biased_output(const BevGrid & like, const ConvKernel & kern)
{
  BevSpec spec = like.spec;
  spec.channels = kern.out_channels;
  BevGrid out(spec);
  for (int o = 0; o < kern.out_channels; ++o) {
    std::fill_n(out.data.begin() + static_cast<std::ptrdiff_t>(o * out.cells()), out.cells(), kern.bias[static_cast<std::size_t>(o)]);
  }
  return out;
}

}  // namespace detail

/// Zero-padded, stride-1 cross-correlation plus bias.
inline BevGrid conv2d(const BevGrid & in, const ConvKernel & kern)
{
  kern.validate();
  require(kern.in_channels == in.channels(), "kernel input channels must equal grid channels");
  BevGrid out = detail::biased_output(in, kern);
  detail::correlate_into(in, kern, 0, out);
  return out;
}

/// Concatenative fusion: conv over the channel concatenation [cam | lidar].
inline BevGrid fuse_concat_conv(const BevGrid & cam, const BevGrid & lidar, const ConvKernel & kernel)
{
  kernel.validate();
  require(cam.same_layout(lidar), "camera and LiDAR BEV grids must share extent and dimensions");
  require(kernel.in_channels == cam.channels() + lidar.channels(), "kernel input channels must equal the concatenated channel count");
  BevGrid out = detail::biased_output(cam, kernel);
  // Correlating each block into the same accumulator is the same sum as
  // correlating the materialized concatenation.
  detail::correlate_into(cam, kernel, 0, out);
  detail::correlate_into(lidar, kernel, cam.channels(), out);
  return out;
}

/// Additive fusion: conv(cam) + conv(lidar) with independent kernels.
inline BevGrid fuse_additive(const BevGrid & cam, const BevGrid & lidar, const ConvKernel & kernel_cam, const ConvKernel & kernel_lidar)
{
  require(cam.same_layout(lidar), "camera and LiDAR BEV grids must share extent and dimensions");
  require(kernel_cam.out_channels == kernel_lidar.out_channels, "additive fusion kernels must produce equal channel counts");
  BevGrid out = conv2d(cam, kernel_cam);
  const BevGrid other = conv2d(lidar, kernel_lidar);
  for (std::size_t k = 0; k < out.data.size(); ++k) {
    out.data[k] += other.data[k];
  }
  return out;
}

}  // namespace semfuse
