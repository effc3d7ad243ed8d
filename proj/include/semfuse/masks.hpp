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
#include <span>
#include <vector>

#include "semfuse/common.hpp"

namespace semfuse
{

/// Binary instance mask at full image resolution.
struct InstanceMask
{
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bitmap;  // row-major, 0 or 1
  int category = 0;
  double score = 0.0;

  InstanceMask() = default;
  InstanceMask(int w, int h, int cat, double s)
  : width(w), height(h), bitmap(static_cast<std::size_t>(w) * h, 0), category(cat), score(s)
  {
    validate();
  }

  bool at(int x, int y) const { return bitmap[static_cast<std::size_t>(y) * width + x] != 0; }
  void set(int x, int y, bool value = true) { bitmap[static_cast<std::size_t>(y) * width + x] = value ? 1 : 0; }

  std::size_t area() const
  {
    std::size_t n = 0;
    for (auto b : bitmap) {
      n += b != 0;
    }
    return n;
  }

  void validate() const
  {
    require(width > 0 && height > 0, "mask dimensions must be positive");
    require(bitmap.size() == static_cast<std::size_t>(width) * height, "mask bitmap size mismatch");
    require(category >= 0, "mask category must be non-negative");
    require(score >= 0.0 && score <= 1.0, "mask score must lie in [0, 1]");
  }
};

/// Instance precedence used wherever several instances claim one pixel:
/// higher score, then lower category, then lower ordinal.
inline bool outranks(double score_a, int cat_a, std::size_t ord_a, double score_b, int cat_b, std::size_t ord_b)
{
  if (score_a != score_b) {
    return score_a > score_b;
  }
  if (cat_a != cat_b) {
    return cat_a < cat_b;
  }
  return ord_a < ord_b;
}

/// Instance masks resampled to feature resolution (category -1 = background).
struct SemanticImage
{
  int width = 0;
  int height = 0;
  std::vector<int> category;
  std::vector<double> score;
  std::vector<std::uint8_t> foreground;

  SemanticImage() = default;
  SemanticImage(int w, int h)
  : width(w), height(h),
    category(static_cast<std::size_t>(w) * h, -1),
    score(static_cast<std::size_t>(w) * h, 0.0),
    foreground(static_cast<std::size_t>(w) * h, 0)
  {
  }

  std::size_t size() const { return category.size(); }

  std::size_t foreground_count() const
  {
    std::size_t n = 0;
    for (auto f : foreground) {
      n += f != 0;
    }
    return n;
  }

  /// Pixels that are foreground with score at or above the threshold.
  std::size_t retained_count(double score_threshold) const
  {
    std::size_t n = 0;
    for (std::size_t p = 0; p < size(); ++p) {
      n += (foreground[p] != 0 && score[p] >= score_threshold);
    }
    return n;
  }

  double foreground_fraction() const
  {
    return size() == 0 ? 0.0 : static_cast<double>(foreground_count()) / static_cast<double>(size());
  }
};

/// Dense camera feature map stored channel-major (C x H x W).
struct FeatureImage
{
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<double> data;

  FeatureImage() = default;
  FeatureImage(int c, int h, int w)
  : channels(c), height(h), width(w), data(static_cast<std::size_t>(c) * h * w, 0.0)
  {
    require(c >= 1 && h >= 1 && w >= 1, "feature image dimensions must be positive");
  }

  std::size_t pixels() const { return static_cast<std::size_t>(height) * width; }

  double & at(int c, int y, int x) { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  double at(int c, int y, int x) const { return data[(static_cast<std::size_t>(c) * height + y) * width + x]; }

  void validate() const
  {
    require(channels >= 1 && height >= 1 && width >= 1, "feature image dimensions must be positive");
    require(data.size() == static_cast<std::size_t>(channels) * pixels(), "feature image payload size mismatch");
    for (double v : data) {
      require(std::isfinite(v), "feature image contains non-finite values");
    }
  }
};

/// Nearest-neighbour resampling of instance masks onto a feature grid. Each
/// feature cell samples the image pixel containing its center; overlapping
/// instances resolve by `outranks` with the instance's list position as the
/// final tie-break.
inline SemanticImage downscale_masks(std::span<const InstanceMask> masks, int feature_w, int feature_h)
{
  require(feature_w >= 1 && feature_h >= 1, "feature grid dimensions must be positive");
  SemanticImage sem(feature_w, feature_h);
  if (masks.empty()) {
    return sem;
  }
  const int img_w = masks.front().width;
  const int img_h = masks.front().height;
  for (const auto & m : masks) {
    m.validate();
    require(m.width == img_w && m.height == img_h, "all masks of one image must share its dimensions");
  }
  const double stride_u = static_cast<double>(img_w) / feature_w;
  const double stride_v = static_cast<double>(img_h) / feature_h;
  for (int row = 0; row < feature_h; ++row) {
    const int y = std::min(img_h - 1, static_cast<int>(std::floor((row + 0.5) * stride_v)));
    for (int col = 0; col < feature_w; ++col) {
      const int x = std::min(img_w - 1, static_cast<int>(std::floor((col + 0.5) * stride_u)));
      const std::size_t p = static_cast<std::size_t>(row) * feature_w + col;
      std::size_t best = masks.size();
      for (std::size_t k = 0; k < masks.size(); ++k) {
        if (!masks[k].at(x, y)) {
          continue;
        }
        if (best == masks.size() ||
          outranks(masks[k].score, masks[k].category, k, masks[best].score, masks[best].category, best))
        {
          best = k;
        }
      }
      if (best != masks.size()) {
        sem.category[p] = masks[best].category;
        sem.score[p] = masks[best].score;
        sem.foreground[p] = 1;
      }
    }
  }
  return sem;
}

/// Affine map from the (N + 1)-wide semantic vector (one-hot category then
/// score) to C_cam feature channels. Weights are row-major C_cam x (N + 1).
struct SemanticCombiner
{
  int out_channels = 0;
  int n_categories = 0;
  std::vector<double> weights;
  std::vector<double> bias;

  int in_width() const { return n_categories + 1; }

  double weight(int c, int j) const { return weights[static_cast<std::size_t>(c) * in_width() + j]; }

  static SemanticCombiner zeros(int out_channels, int n_categories)
  {
    SemanticCombiner k{out_channels, n_categories, {}, {}};
    k.weights.assign(static_cast<std::size_t>(out_channels) * (n_categories + 1), 0.0);
    k.bias.assign(static_cast<std::size_t>(out_channels), 0.0);
    return k;
  }

  void validate() const
  {
    require(out_channels >= 1 && n_categories >= 1, "combiner needs at least one output channel and category");
    require(weights.size() == static_cast<std::size_t>(out_channels) * in_width(), "combiner weight shape mismatch");
    require(bias.size() == static_cast<std::size_t>(out_channels), "combiner bias shape mismatch");
    for (double w : weights) {
      require(std::isfinite(w), "combiner weights must be finite");
    }
    for (double b : bias) {
      require(std::isfinite(b), "combiner bias must be finite");
    }
  }
};

/// Adds combiner(semantic_vector(p)) to every feature pixel. Background
/// pixels use the all-zero semantic vector, so only the bias is added there.
inline FeatureImage embed_semantics(const FeatureImage & features, const SemanticImage & sem, const SemanticCombiner & combiner)
{
  features.validate();
  combiner.validate();
  require(combiner.out_channels == features.channels, "combiner output width must equal feature channels");
  require(sem.width == features.width && sem.height == features.height, "semantic image and features differ in size");
  FeatureImage out = features;
  const std::size_t pixels = features.pixels();
  for (std::size_t p = 0; p < pixels; ++p) {
    const int cat = sem.category[p];
    require(cat < combiner.n_categories, "semantic category exceeds combiner width");
    for (int c = 0; c < features.channels; ++c) {
      double add = combiner.bias[static_cast<std::size_t>(c)];
      if (sem.foreground[p] != 0 && cat >= 0) {
        add += combiner.weight(c, cat) + combiner.weight(c, combiner.n_categories) * sem.score[p];
      }
      out.data[static_cast<std::size_t>(c) * pixels + p] += add;
    }
  }
  return out;
}

}  // namespace semfuse
