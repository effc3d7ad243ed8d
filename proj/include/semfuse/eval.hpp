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

// nuScenes-style detection evaluation.
//
// Conventions inherited from the nuScenes detection protocol:
//   * greedy matching by BEV center distance, detections in descending score
//     order, a match requires distance < threshold;
//   * precision/recall sampled at 101 evenly spaced recall points with
//     numpy.interp semantics (right fill 0);
//   * AP integrates precision over recall > recall_floor after subtracting
//     min_precision_floor and renormalizing by (1 - min_precision_floor);
//   * TP errors use native units (m, 1 - IoU, rad, m/s, 1 - acc) and enter
//     NDS as max(0, 1 - min(1, err)).
// Local conventions: TP errors average over matched pairs at tp_threshold;
// an error with no contributing pairs is missing and drops out of NDS (its
// weight is removed from the denominator).

#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <numbers>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "semfuse/common.hpp"
#include "semfuse/geometry.hpp"

namespace semfuse
{

/// Wraps an angle into (-pi, pi].
inline double normalize_yaw(double yaw)
{
  double a = std::fmod(yaw, 2.0 * std::numbers::pi);
  if (a <= -std::numbers::pi) {
    a += 2.0 * std::numbers::pi;
  } else if (a > std::numbers::pi) {
    a -= 2.0 * std::numbers::pi;
  }
  return a;
}

/// Oriented box on the ground plane. `size` is (w, l, h): l runs along the
/// heading, w across it.
struct Box3D
{
  Vec3 center = Vec3::Zero();
  Vec3 size = Vec3::Ones();
  double yaw = 0.0;
  std::optional<Eigen::Vector2d> velocity;
  int category = 0;
  double score = 1.0;
  std::optional<int> attribute;
  /// Frame the box belongs to; matching never crosses frames.
  int sample = 0;

  double bev_distance() const { return std::hypot(center.x(), center.y()); }
  double volume() const { return size.x() * size.y() * size.z(); }

  void validate() const
  {
    require(center.allFinite(), "box center must be finite");
    require(size.x() > 0.0 && size.y() > 0.0 && size.z() > 0.0, "box sizes must be strictly positive");
    require(std::isfinite(yaw) && yaw > -std::numbers::pi && yaw <= std::numbers::pi, "box yaw must lie in (-pi, pi]");
    require(score >= 0.0 && score <= 1.0, "box score must lie in [0, 1]");
    require(category >= 0, "box category must be non-negative");
  }
};

struct RangeBin
{
  double lo;
  double hi;
};

struct EvalConfig
{
  std::vector<double> match_thresholds{0.5, 1.0, 2.0, 4.0};
  double tp_threshold = 2.0;
  std::vector<RangeBin> range_bins{{0.0, 18.0}, {18.0, 36.0}, {36.0, 54.0}};
  double recall_floor = 0.1;
  double min_precision_floor = 0.1;
  /// Categories to average over. Empty: every category seen in GT or
  /// detections.
  std::vector<int> categories;

  void validate() const
  {
    require(!match_thresholds.empty(), "at least one match threshold is required");
    for (std::size_t i = 0; i < match_thresholds.size(); ++i) {
      require(match_thresholds[i] > 0.0, "match thresholds must be positive");
      require(i == 0 || match_thresholds[i] > match_thresholds[i - 1], "match thresholds must be ascending");
    }
    require(tp_threshold > 0.0, "tp threshold must be positive");
    require(recall_floor >= 0.0 && recall_floor < 1.0, "recall floor must lie in [0, 1)");
    require(min_precision_floor >= 0.0 && min_precision_floor < 1.0, "precision floor must lie in [0, 1)");
    for (std::size_t i = 0; i < range_bins.size(); ++i) {
      require(range_bins[i].lo >= 0.0 && range_bins[i].hi > range_bins[i].lo, "range bins must be nonempty");
      require(i == 0 || range_bins[i].lo >= range_bins[i - 1].hi, "range bins must be ascending and disjoint");
    }
  }
};

struct Matching
{
  std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (det, gt), in rank order
  std::vector<std::size_t> unmatched_dets;
  std::vector<std::size_t> unmatched_gts;
  std::vector<std::size_t> ranked;  // detection indices by descending score
  std::vector<bool> ranked_tp;      // parallel to `ranked`

  friend bool operator==(const Matching &, const Matching &) = default;
};

/// Detection indices by descending score; equal scores keep input order.
inline std::vector<std::size_t> rank_by_score(std::span<const Box3D> dets)
{
  std::vector<std::size_t> order(dets.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return dets[a].score > dets[b].score; });
  return order;
}

inline double center_distance(const Box3D & a, const Box3D & b)
{
  return std::hypot(a.center.x() - b.center.x(), a.center.y() - b.center.y());
}

/// Greedy center-distance matching for a single category. Each detection, in
/// descending score order, claims the nearest unclaimed GT of the same
/// sample strictly closer than `threshold`; equal distances go to the lower
/// GT index.
inline Matching match_by_center(std::span<const Box3D> dets, std::span<const Box3D> gts, double threshold)
{
  Matching m;
  m.ranked = rank_by_score(dets);
  m.ranked_tp.assign(dets.size(), false);
  std::vector<bool> taken(gts.size(), false);
  std::vector<bool> det_matched(dets.size(), false);
  for (std::size_t r = 0; r < m.ranked.size(); ++r) {
    const std::size_t d = m.ranked[r];
    std::size_t best = gts.size();
    double best_dist = 0.0;
    for (std::size_t g = 0; g < gts.size(); ++g) {
      if (taken[g] || gts[g].sample != dets[d].sample) {
        continue;
      }
      const double dist = center_distance(dets[d], gts[g]);
      if (best == gts.size() || dist < best_dist) {
        best = g;
        best_dist = dist;
      }
    }
    if (best != gts.size() && best_dist < threshold) {
      taken[best] = true;
      det_matched[d] = true;
      m.ranked_tp[r] = true;
      m.pairs.emplace_back(d, best);
    }
  }
  for (std::size_t d = 0; d < dets.size(); ++d) {
    if (!det_matched[d]) {
      m.unmatched_dets.push_back(d);
    }
  }
  for (std::size_t g = 0; g < gts.size(); ++g) {
    if (!taken[g]) {
      m.unmatched_gts.push_back(g);
    }
  }
  return m;
}

/// numpy.interp(x, xs, ys, right=0) for ascending (possibly repeated) xs.
inline double interp_like_numpy(double x, std::span<const double> xs, std::span<const double> ys, double right = 0.0)
{
  const std::size_t n = xs.size();
  if (x > xs[n - 1]) {
    return right;
  }
  if (x < xs[0]) {
    return ys[0];
  }
  if (x == xs[n - 1]) {
    return ys[n - 1];
  }
  const auto j = static_cast<std::size_t>(std::upper_bound(xs.begin(), xs.end(), x) - xs.begin()) - 1;
  if (xs[j] == x) {
    return ys[j];
  }
  const double slope = (ys[j + 1] - ys[j]) / (xs[j + 1] - xs[j]);
  return slope * (x - xs[j]) + ys[j];
}

inline constexpr int kRecallSamples = 101;

/// Precision sampled at recall k / 100, k = 0..100.
inline std::array<double, kRecallSamples> interpolated_precision(const Matching & m, std::size_t n_gt)
{
  std::array<double, kRecallSamples> out{};
  if (n_gt == 0 || m.ranked.empty()) {
    return out;
  }
  std::vector<double> prec;
  std::vector<double> rec;
  prec.reserve(m.ranked.size());
  rec.reserve(m.ranked.size());
  double tp = 0.0;
  double fp = 0.0;
  for (bool hit : m.ranked_tp) {
    (hit ? tp : fp) += 1.0;
    prec.push_back(tp / (tp + fp));
    rec.push_back(tp / static_cast<double>(n_gt));
  }
  for (int k = 0; k < kRecallSamples; ++k) {
    out[static_cast<std::size_t>(k)] = interp_like_numpy(k / 100.0, rec, prec, 0.0);
  }
  return out;
}

/// AP from an existing matching.
inline double average_precision(const Matching & m, std::size_t n_gt, const EvalConfig & config)
{
  if (n_gt == 0 || m.ranked.empty()) {
    return 0.0;
  }
  const auto prec = interpolated_precision(m, n_gt);
  const auto first = static_cast<std::size_t>(std::lround(100.0 * config.recall_floor)) + 1;
  if (first >= prec.size()) {
    return 0.0;
  }
  const double floor = config.min_precision_floor;
  double sum = 0.0;
  for (std::size_t k = first; k < prec.size(); ++k) {
    sum += std::max(0.0, (prec[k] - floor) / (1.0 - floor));
  }
  return sum / static_cast<double>(prec.size() - first);
}

/// Single-category AP at one center-distance threshold.
inline double average_precision(std::span<const Box3D> dets, std::span<const Box3D> gts, double threshold, const EvalConfig & config)
{
  return average_precision(match_by_center(dets, gts, threshold), gts.size(), config);
}

struct TpErrors
{
  std::optional<double> ate;  // meters
  std::optional<double> ase;  // 1 - aligned IoU
  std::optional<double> aoe;  // radians
  std::optional<double> ave;  // m/s
  std::optional<double> aae;  // 1 - attribute accuracy

  std::array<std::optional<double>, 5> as_array() const { return {ate, ase, aoe, ave, aae}; }
};

/// 3D IoU of two boxes after aligning their centers and headings, i.e. a
/// pure size comparison.
inline double aligned_iou(const Vec3 & a, const Vec3 & b)
{
  const double inter = std::min(a.x(), b.x()) * std::min(a.y(), b.y()) * std::min(a.z(), b.z());
  const double va = a.x() * a.y() * a.z();
  const double vb = b.x() * b.y() * b.z();
  return inter / (va + vb - inter);
}

/// Smallest absolute difference between two headings, in [0, pi].
inline double yaw_difference(double a, double b)
{
  return std::abs(normalize_yaw(a - b));
}

inline TpErrors tp_errors(const Matching & m, std::span<const Box3D> dets, std::span<const Box3D> gts)
{
  TpErrors e;
  if (m.pairs.empty()) {
    return e;
  }
  double ate = 0.0;
  double ase = 0.0;
  double aoe = 0.0;
  double ave = 0.0;
  double attr_wrong = 0.0;
  std::size_t n_vel = 0;
  std::size_t n_attr = 0;
  for (const auto & [d, g] : m.pairs) {
    const Box3D & det = dets[d];
    const Box3D & gt = gts[g];
    ate += center_distance(det, gt);
    ase += 1.0 - aligned_iou(det.size, gt.size);
    aoe += yaw_difference(det.yaw, gt.yaw);
    if (det.velocity && gt.velocity) {
      ave += (*det.velocity - *gt.velocity).norm();
      ++n_vel;
    }
    if (det.attribute && gt.attribute) {
      attr_wrong += *det.attribute == *gt.attribute ? 0.0 : 1.0;
      ++n_attr;
    }
  }
  const auto n = static_cast<double>(m.pairs.size());
  e.ate = ate / n;
  e.ase = ase / n;
  e.aoe = aoe / n;
  if (n_vel > 0) {
    e.ave = ave / static_cast<double>(n_vel);
  }
  if (n_attr > 0) {
    e.aae = attr_wrong / static_cast<double>(n_attr);
  }
  return e;
}

/// nuScenes detection score. Missing TP errors drop out of both the sum and
/// the normalizer.
inline double nds(double mean_ap, const TpErrors & errors)
{
  double total = 5.0 * mean_ap;
  double weight = 5.0;
  for (const auto & err : errors.as_array()) {
    if (err) {
      total += std::max(0.0, 1.0 - std::min(1.0, *err));
      weight += 1.0;
    }
  }
  return total / weight;
}

struct CategoryResult
{
  int category = 0;
  std::size_t n_gt = 0;
  std::size_t n_det = 0;
  std::vector<double> ap;  // per match threshold
  double mean_ap = 0.0;
  TpErrors tp;
};

struct EvalReport
{
  std::vector<double> thresholds;
  std::vector<CategoryResult> categories;
  double mean_ap = 0.0;
  TpErrors mean_tp;
  double nds = 0.0;
};

/// Keeps boxes of one category, preserving order.
inline std::vector<Box3D> of_category(std::span<const Box3D> boxes, int category)
{
  std::vector<Box3D> out;
  for (const auto & b : boxes) {
    if (b.category == category) {
      out.push_back(b);
    }
  }
  return out;
}

inline std::vector<int> categories_present(std::span<const Box3D> dets, std::span<const Box3D> gts)
{
  std::set<int> cats;
  for (const auto & b : dets) {
    cats.insert(b.category);
  }
  for (const auto & b : gts) {
    cats.insert(b.category);
  }
  return {cats.begin(), cats.end()};
}

/// Full per-category evaluation: AP at every match threshold, TP errors at
/// tp_threshold, mAP, class-averaged TP errors and NDS.
inline EvalReport evaluate(std::span<const Box3D> dets, std::span<const Box3D> gts, const EvalConfig & config)
{
  config.validate();
  EvalReport report;
  report.thresholds = config.match_thresholds;
  const auto cats = config.categories.empty() ? categories_present(dets, gts) : config.categories;
  std::array<double, 5> tp_sum{};
  std::array<std::size_t, 5> tp_n{};
  for (int cat : cats) {
    const auto d = of_category(dets, cat);
    const auto g = of_category(gts, cat);
    CategoryResult r;
    r.category = cat;
    r.n_det = d.size();
    r.n_gt = g.size();
    for (double th : config.match_thresholds) {
      r.ap.push_back(average_precision(d, g, th, config));
    }
    r.mean_ap = std::accumulate(r.ap.begin(), r.ap.end(), 0.0) / static_cast<double>(r.ap.size());
    r.tp = tp_errors(match_by_center(d, g, config.tp_threshold), d, g);
    const auto errs = r.tp.as_array();
    for (std::size_t k = 0; k < errs.size(); ++k) {
      if (errs[k]) {
        tp_sum[k] += *errs[k];
        ++tp_n[k];
      }
    }
    report.mean_ap += r.mean_ap;
    report.categories.push_back(std::move(r));
  }
  if (!cats.empty()) {
    report.mean_ap /= static_cast<double>(cats.size());
  }
  std::array<std::optional<double>, 5> mean_errs;
  for (std::size_t k = 0; k < 5; ++k) {
    if (tp_n[k] > 0) {
      mean_errs[k] = tp_sum[k] / static_cast<double>(tp_n[k]);
    }
  }
  report.mean_tp = {mean_errs[0], mean_errs[1], mean_errs[2], mean_errs[3], mean_errs[4]};
  report.nds = cats.empty() ? 0.0 : nds(report.mean_ap, report.mean_tp);
  return report;
}

/// Index of the bin holding a BEV distance: bins are [lo, hi) except the
/// last, which is [lo, hi].
inline std::optional<std::size_t> range_bin_of(double distance, std::span<const RangeBin> bins)
{
  for (std::size_t b = 0; b < bins.size(); ++b) {
    const bool last = b + 1 == bins.size();
    if (distance >= bins[b].lo && (distance < bins[b].hi || (last && distance <= bins[b].hi))) {
      return b;
    }
  }
  return std::nullopt;
}

struct RangeBinReport
{
  RangeBin bin;
  EvalReport report;
};

struct RangeReport
{
  RangeBin whole;  // union of the bins
  EvalReport whole_report;
  std::vector<RangeBinReport> bins;
};

/// Evaluates each range bin on the GTs and detections whose own BEV centers
/// fall in it, plus the whole span covered by the bins.
inline RangeReport range_binned_eval(std::span<const Box3D> dets, std::span<const Box3D> gts, const EvalConfig & config)
{
  config.validate();
  require(!config.range_bins.empty(), "range-binned evaluation needs at least one bin");
  const std::size_t n_bins = config.range_bins.size();
  std::vector<std::vector<Box3D>> bin_dets(n_bins);
  std::vector<std::vector<Box3D>> bin_gts(n_bins);
  std::vector<Box3D> all_dets;
  std::vector<Box3D> all_gts;
  for (const auto & b : dets) {
    if (const auto k = range_bin_of(b.bev_distance(), config.range_bins)) {
      bin_dets[*k].push_back(b);
      all_dets.push_back(b);
    }
  }
  for (const auto & b : gts) {
    if (const auto k = range_bin_of(b.bev_distance(), config.range_bins)) {
      bin_gts[*k].push_back(b);
      all_gts.push_back(b);
    }
  }
  RangeReport out;
  out.whole = {config.range_bins.front().lo, config.range_bins.back().hi};
  out.whole_report = evaluate(all_dets, all_gts, config);
  for (std::size_t k = 0; k < n_bins; ++k) {
    out.bins.push_back({config.range_bins[k], evaluate(bin_dets[k], bin_gts[k], config)});
  }
  return out;
}

}  // namespace semfuse
