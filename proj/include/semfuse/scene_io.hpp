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

// Scene and pipeline configuration documents, and the on-disk layout of a
// synthesized scene.

#pragma once

#include <cstdio>
#include <string>
#include <vector>

#include "semfuse/io.hpp"
#include "semfuse/pipeline.hpp"
#include "semfuse/proposals.hpp"
#include "semfuse/synth.hpp"

namespace semfuse::io
{

inline json vec3_to_json(const Vec3 & v) { return json::array({v.x(), v.y(), v.z()}); }

inline Vec3 vec3_from_json(const json & j)
{
  if (!j.is_array() || j.size() != 3) {
    throw ParseError("expected a 3-vector");
  }
  return {j[0].get<double>(), j[1].get<double>(), j[2].get<double>()};
}

// ---------------------------------------------------------------------------
// Scene config. Every key is optional; "rig" takes the calibration layout.

inline SceneConfig scene_config_from_json(const json & j)
{
  return parsing("scene config", [&] {
    SceneConfig c;
    c.seed = j.value("seed", c.seed);
    c.n_objects = j.value("n_objects", c.n_objects);
    c.category_weights = j.value("category_weights", c.category_weights);
    if (j.contains("categories")) {
      c.categories.clear();
      for (const auto & t : j.at("categories")) {
        c.categories.push_back({t.at("name").get<std::string>(), vec3_from_json(t.at("size"))});
      }
    }
    c.extent = j.value("extent", c.extent);
    c.min_range = j.value("min_range", c.min_range);
    c.max_range = j.value("max_range", c.max_range);
    c.points_per_m2 = j.value("points_per_m2", c.points_per_m2);
    c.ground_points_per_m2 = j.value("ground_points_per_m2", c.ground_points_per_m2);
    if (j.contains("lidar_origin")) {
      c.lidar_origin = vec3_from_json(j.at("lidar_origin"));
    }
    if (j.contains("rig")) {
      c.rig = rig_from_json(j.at("rig"));
    }
    c.mask_noise = j.value("mask_noise", c.mask_noise);
    if (j.contains("target_fg_fraction") && !j.at("target_fg_fraction").is_null()) {
      c.target_fg_fraction = j.at("target_fg_fraction").get<double>();
    }
    c.fg_tolerance = j.value("fg_tolerance", c.fg_tolerance);
    c.max_attempts = j.value("max_attempts", c.max_attempts);
    c.feature_w = j.value("feature_w", c.feature_w);
    c.feature_h = j.value("feature_h", c.feature_h);
    c.feature_channels = j.value("feature_channels", c.feature_channels);
    return c;
  });
}

inline json scene_config_to_json(const SceneConfig & c)
{
  json cats = json::array();
  for (const auto & t : c.categories) {
    cats.push_back({{"name", t.name}, {"size", vec3_to_json(t.size)}});
  }
  json j = {{"seed", c.seed}, {"n_objects", c.n_objects}, {"category_weights", c.category_weights}, {"categories", cats},
            {"extent", c.extent}, {"min_range", c.min_range}, {"max_range", c.max_range},
            {"points_per_m2", c.points_per_m2}, {"ground_points_per_m2", c.ground_points_per_m2},
            {"lidar_origin", vec3_to_json(c.lidar_origin)}, {"rig", rig_to_json(c.rig)}, {"mask_noise", c.mask_noise},
            {"target_fg_fraction", nullptr}, {"fg_tolerance", c.fg_tolerance}, {"max_attempts", c.max_attempts},
            {"feature_w", c.feature_w}, {"feature_h", c.feature_h}, {"feature_channels", c.feature_channels}};
  if (c.target_fg_fraction) {
    j["target_fg_fraction"] = *c.target_fg_fraction;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Pipeline config. Paths resolve against the config file's directory.
//
// {
//   "calibration": "calibration.json", "masks": "masks.json",
//   "cloud": "cloud.bin", "features": "features.json",
//   "attention": "attention.json",            // optional; absent = all ones
//   "combiner": "combiner.json", "pillar_spec": "pillar.json",
//   "kernel": "kernel_concat.json",           // concat_conv
//   "kernel_cam": "..", "kernel_lidar": "..", // additive
//   "eval_config": "eval.json",               // optional
//   "mode": "attention+semantic_mask", "fuser": "concat_conv",
//   "n_categories": 10,
//   "depth_bins": {"near": 1.0, "width": 0.5, "count": 118},
//   "bev": {"extent": [-54, 54, -54, 54], "rows": 180, "cols": 180},
//   "score_threshold": 0.0, "depth_threshold": 0.01,
//   "proposals": { "threshold": .., "min_cells": .., "push_out": ..,
//                  "score_scale": .., "sizes": [[w, l, h], ..] }  // optional
// }

struct RunConfig
{
  PipelineInputs inputs;
  std::optional<ProposalConfig> proposals;
  std::optional<EvalConfig> eval;
};

inline RunConfig load_run_config(const fs::path & path)
{
  const json j = read_json(path);
  const fs::path dir = path.parent_path();
  auto file = [&](const char * key) { return resolve(dir, j.at(key).get<std::string>()); };
  RunConfig rc;
  PipelineInputs & in = rc.inputs;
  parsing(path.string(), [&] {
    in.mode = parse_view_mode(j.value("mode", std::string(to_string(in.mode))));
    in.fuser = parse_fuser(j.value("fuser", std::string(to_string(in.fuser))));
    in.n_categories = j.value("n_categories", in.n_categories);
    if (j.contains("depth_bins")) {
      in.bins = binning_from_json(j.at("depth_bins"));
    }
    if (j.contains("bev")) {
      const auto & b = j.at("bev");
      in.extent = extent_from_json(b.at("extent"));
      in.bev_rows = b.value("rows", in.bev_rows);
      in.bev_cols = b.value("cols", in.bev_cols);
    }
    in.score_threshold = j.value("score_threshold", in.score_threshold);
    in.depth_threshold = j.value("depth_threshold", in.depth_threshold);

    in.rig = read_calibration(file("calibration"));
    in.masks = read_mask_manifest(file("masks"));
    in.features = read_feature_manifest(file("features"));
    if (j.contains("attention") && !j.at("attention").is_null()) {
      in.attention = read_attention_manifest(file("attention"));
    }
    const auto cloud = read_cloud(file("cloud"));
    in.cloud = cloud.points;
    in.combiner = combiner_from_json(read_json(file("combiner")));
    in.pillar = pillar_spec_from_json(read_json(file("pillar_spec")));
    if (in.fuser == FuserKind::kConcatConv) {
      in.kernel = kernel_from_json(read_json(file("kernel")));
    } else {
      in.kernel_cam = kernel_from_json(read_json(file("kernel_cam")));
      in.kernel_lidar = kernel_from_json(read_json(file("kernel_lidar")));
    }
    if (j.contains("eval_config")) {
      rc.eval = eval_config_from_json(read_json(file("eval_config")));
    }
    if (j.contains("proposals")) {
      const auto & p = j.at("proposals");
      ProposalConfig pc;
      pc.n_categories = in.n_categories;
      pc.first_channel = p.value("first_channel", pc.first_channel);
      pc.threshold = p.value("threshold", pc.threshold);
      pc.min_cells = p.value("min_cells", pc.min_cells);
      pc.push_out = p.value("push_out", pc.push_out);
      pc.score_scale = p.value("score_scale", pc.score_scale);
      for (const auto & s : p.at("sizes")) {
        pc.sizes.push_back(vec3_from_json(s));
      }
      rc.proposals = pc;
    }
  });
  return rc;
}

// ---------------------------------------------------------------------------
// Synthesized scene on disk.

/// Default weights for running a synthesized scene end to end: camera
/// category evidence enters channel k through the combiner, and both streams
/// are mapped onto per-category fused channels.
struct SceneDefaults
{
  double combiner_gain = 1.0;
  double camera_gain = 0.1;
  double lidar_gain = 1.0;
  ViewMode mode = ViewMode::kAttentionSemanticMask;
  FuserKind fuser = FuserKind::kConcatConv;
  DepthBinning bins;
  double attention_sigma = 1.0;
  ProposalConfig proposals;
};

struct SceneFiles
{
  std::vector<fs::path> written;
};

inline SceneFiles write_scene(const Scene & scene, const SceneConfig & cfg, const fs::path & dir, const SceneDefaults & d = {})
{
  SceneFiles out;
  fs::create_directories(dir / "masks");
  fs::create_directories(dir / "features");
  fs::create_directories(dir / "attention");
  auto note = [&](const fs::path & p) { out.written.push_back(p); };

  write_calibration(dir / "calibration.json", scene.rig);
  note(dir / "calibration.json");
  write_cloud(dir / "cloud.bin", scene.cloud);
  note(dir / "cloud.bin");
  write_boxes(dir / "gt.txt", scene.gt_boxes);
  note(dir / "gt.txt");

  json mask_cams = json::array();
  json feat_cams = json::array();
  json att_cams = json::array();
  for (std::size_t c = 0; c < scene.rig.size(); ++c) {
    const std::string cam = "cam" + std::to_string(c);
    json files = json::array();
    for (std::size_t k = 0; k < scene.masks_per_camera[c].size(); ++k) {
      char name[64];
      std::snprintf(name, sizeof(name), "masks/%s_%03zu.rle", cam.c_str(), k);
      write_mask(dir / name, scene.masks_per_camera[c][k]);
      note(dir / name);
      files.push_back(name);
    }
    mask_cams.push_back({{"name", scene.rig[c].name()}, {"masks", files}});
    if (!scene.feature_images.empty()) {
      const std::string f = "features/" + cam + ".sff";
      write_feature_image(dir / f, scene.feature_images[c]);
      note(dir / f);
      feat_cams.push_back({{"name", scene.rig[c].name()}, {"file", f}});
    }
    const std::string a = "attention/" + cam + ".sfda";
    write_attention(dir / a, depth_oracle_attention(scene, c, d.bins, d.attention_sigma));
    note(dir / a);
    att_cams.push_back({{"name", scene.rig[c].name()}, {"file", a}});
  }
  write_json(dir / "masks.json", {{"cameras", mask_cams}});
  note(dir / "masks.json");
  write_json(dir / "attention.json", {{"cameras", att_cams}});
  note(dir / "attention.json");
  if (!scene.feature_images.empty()) {
    write_json(dir / "features.json", {{"cameras", feat_cams}});
    note(dir / "features.json");
  }

  const int n_cat = scene.n_categories;
  const BevExtent extent{-cfg.extent, cfg.extent, -cfg.extent, cfg.extent};
  PillarSpec pillar;
  pillar.extent = extent;
  const auto kernels = evidence_kernels(cfg.feature_channels, pillar, n_cat, d.camera_gain, d.lidar_gain);
  write_json(dir / "combiner.json", combiner_to_json(category_combiner(cfg.feature_channels, n_cat, d.combiner_gain)));
  write_json(dir / "pillar.json", pillar_spec_to_json(pillar));
  write_json(dir / "kernel_concat.json", kernel_to_json(kernels.concat()));
  write_json(dir / "kernel_cam.json", kernel_to_json(kernels.camera));
  write_json(dir / "kernel_lidar.json", kernel_to_json(kernels.lidar));
  write_json(dir / "eval.json", eval_config_to_json(EvalConfig{}));
  for (const char * f : {"combiner.json", "pillar.json", "kernel_concat.json", "kernel_cam.json", "kernel_lidar.json", "eval.json"}) {
    note(dir / f);
  }

  json sizes = json::array();
  for (int k = 0; k < n_cat; ++k) {
    sizes.push_back(vec3_to_json(cfg.categories[static_cast<std::size_t>(k)].size));
  }
  const ProposalConfig & p = d.proposals;
  json pipeline = {
    {"calibration", "calibration.json"}, {"masks", "masks.json"}, {"cloud", "cloud.bin"}, {"features", "features.json"},
    {"attention", "attention.json"}, {"combiner", "combiner.json"}, {"pillar_spec", "pillar.json"},
    {"kernel", "kernel_concat.json"}, {"kernel_cam", "kernel_cam.json"}, {"kernel_lidar", "kernel_lidar.json"},
    {"eval_config", "eval.json"}, {"mode", std::string(to_string(d.mode))}, {"fuser", std::string(to_string(d.fuser))},
    {"n_categories", n_cat}, {"depth_bins", binning_to_json(d.bins)},
    {"bev", {{"extent", extent_to_json(extent)}, {"rows", pillar.rows}, {"cols", pillar.cols}}},
    {"score_threshold", 0.0}, {"depth_threshold", 0.01},
    {"proposals", {{"threshold", p.threshold}, {"min_cells", p.min_cells}, {"push_out", p.push_out}, {"score_scale", p.score_scale}, {"sizes", sizes}}}};
  write_json(dir / "pipeline.json", pipeline);
  note(dir / "pipeline.json");
  return out;
}

/// Same inputs write_scene + load_run_config would produce, without disk.
inline RunConfig scene_run_config(const Scene & scene, const SceneConfig & cfg, const SceneDefaults & d = {})
{
  RunConfig rc;
  PipelineInputs & in = rc.inputs;
  const int n_cat = scene.n_categories;
  in.rig = scene.rig;
  in.masks = scene.masks_per_camera;
  in.features = scene.feature_images;
  for (std::size_t c = 0; c < scene.rig.size(); ++c) {
    in.attention.push_back(depth_oracle_attention(scene, c, d.bins, d.attention_sigma));
  }
  in.cloud = scene.cloud;
  in.n_categories = n_cat;
  in.combiner = category_combiner(cfg.feature_channels, n_cat, d.combiner_gain);
  in.bins = d.bins;
  in.extent = {-cfg.extent, cfg.extent, -cfg.extent, cfg.extent};
  in.pillar.extent = in.extent;
  in.bev_rows = in.pillar.rows;
  in.bev_cols = in.pillar.cols;
  in.mode = d.mode;
  in.fuser = d.fuser;
  const auto kernels = evidence_kernels(cfg.feature_channels, in.pillar, n_cat, d.camera_gain, d.lidar_gain);
  in.kernel = kernels.concat();
  in.kernel_cam = kernels.camera;
  in.kernel_lidar = kernels.lidar;
  ProposalConfig p = d.proposals;
  p.n_categories = n_cat;
  p.sizes.clear();
  for (int k = 0; k < n_cat; ++k) {
    p.sizes.push_back(cfg.categories[static_cast<std::size_t>(k)].size);
  }
  rc.proposals = p;
  rc.eval = EvalConfig{};
  return rc;
}

}  // namespace semfuse::io
