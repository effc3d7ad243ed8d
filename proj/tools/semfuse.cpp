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

// semfuse command line: synth, run, eval, bench.
//
// Exit codes: 0 success, 1 usage, 2 input parse / IO, 3 contract violation.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "semfuse/eval.hpp"
#include "semfuse/io.hpp"
#include "semfuse/pipeline.hpp"
#include "semfuse/proposals.hpp"
#include "semfuse/scene_io.hpp"
#include "semfuse/synth.hpp"

namespace
{

using semfuse::io::json;
namespace fs = std::filesystem;

enum Exit { kOk = 0, kUsage = 1, kParse = 2, kContract = 3 };

struct Globals
{
  std::string config;
  std::string out;
  int verbosity = 0;
  bool dump_stages = false;
  int threads = 0;
};

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

void info(const Globals & g, const std::string & msg)
{
  if (g.verbosity > 0) {
    std::cerr << msg << '\n';
  }
}

std::string fmt(double v, int prec = 4)
{
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string fmt(const std::optional<double> & v, int prec = 4) { return v ? fmt(*v, prec) : std::string("n/a"); }

json opt_json(const std::optional<double> & v) { return v ? json(*v) : json(nullptr); }

json tp_json(const semfuse::TpErrors & e)
{
  return {{"ate", opt_json(e.ate)}, {"ase", opt_json(e.ase)}, {"aoe", opt_json(e.aoe)}, {"ave", opt_json(e.ave)}, {"aae", opt_json(e.aae)}};
}

json report_json(const semfuse::EvalReport & r)
{
  json cats = json::array();
  for (const auto & c : r.categories) {
    cats.push_back({{"category", c.category}, {"n_gt", c.n_gt}, {"n_det", c.n_det}, {"ap", c.ap}, {"mean_ap", c.mean_ap}, {"tp", tp_json(c.tp)}});
  }
  return {{"thresholds", r.thresholds}, {"categories", cats}, {"mAP", r.mean_ap}, {"tp", tp_json(r.mean_tp)}, {"NDS", r.nds}};
}

void print_report(const semfuse::EvalReport & r, const semfuse::RangeReport & rr)
{
  std::cout << "category  n_gt  n_det";
  for (double th : r.thresholds) {
    std::cout << "  AP@" << fmt(th, 1);
  }
  std::cout << "  mAP     ATE     ASE     AOE     AVE     AAE\n";
  for (const auto & c : r.categories) {
    std::cout << c.category << "  " << c.n_gt << "  " << c.n_det;
    for (double ap : c.ap) {
      std::cout << "  " << fmt(ap);
    }
    std::cout << "  " << fmt(c.mean_ap) << "  " << fmt(c.tp.ate) << "  " << fmt(c.tp.ase) << "  " << fmt(c.tp.aoe) << "  "
              << fmt(c.tp.ave) << "  " << fmt(c.tp.aae) << '\n';
  }
  std::cout << "mAP " << fmt(r.mean_ap) << "  mATE " << fmt(r.mean_tp.ate) << "  mASE " << fmt(r.mean_tp.ase) << "  mAOE "
            << fmt(r.mean_tp.aoe) << "  mAVE " << fmt(r.mean_tp.ave) << "  mAAE " << fmt(r.mean_tp.aae) << "  NDS " << fmt(r.nds)
            << '\n';
  std::cout << "range        mAP     NDS     ATE     ASE\n";
  auto row = [](const std::string & name, const semfuse::EvalReport & e) {
    std::cout << name << "  " << fmt(e.mean_ap) << "  " << fmt(e.nds) << "  " << fmt(e.mean_tp.ate) << "  " << fmt(e.mean_tp.ase) << '\n';
  };
  auto label = [](const semfuse::RangeBin & b) { return fmt(b.lo, 0) + "-" + fmt(b.hi, 0) + "m"; };
  row("whole " + label(rr.whole), rr.whole_report);
  for (const auto & b : rr.bins) {
    row(label(b.bin), b.report);
  }
}

// ---------------------------------------------------------------------------

int cmd_synth(const Globals & g)
{
  if (g.out.empty()) {
    throw UsageError("synth needs --out");
  }
  semfuse::SceneConfig cfg;
  if (!g.config.empty()) {
    cfg = semfuse::io::scene_config_from_json(semfuse::io::read_json(g.config));
  }
  cfg.validate();
  const auto scene = semfuse::synthesize(cfg);
  const auto files = semfuse::io::write_scene(scene, cfg, g.out);
  info(g, "wrote " + std::to_string(files.written.size()) + " files to " + g.out);
  std::cout << "objects " << scene.gt_boxes.size() << " points " << scene.cloud.size() << " foreground_fraction "
            << fmt(scene.foreground_fraction(), 6) << '\n';
  return kOk;
}

json run_report(const semfuse::io::RunConfig & rc, const semfuse::PipelineResult & r)
{
  json timings = json::object();
  for (const auto & t : r.timings) {
    timings[t.stage] = t.seconds;
  }
  return {{"mode", std::string(semfuse::to_string(rc.inputs.mode))}, {"fuser", std::string(semfuse::to_string(rc.inputs.fuser))},
          {"timings_s", timings}, {"painted_points", r.painted_points}, {"lidar_points", rc.inputs.cloud.size()},
          {"pillar_dropped", r.pillar_dropped}, {"pseudo_points_lifted", r.points_lifted},
          {"pseudo_points_after_mask", r.points_after_mask}, {"pseudo_points_pooled", r.points_pooled},
          {"pseudo_points_outside", r.points_outside}, {"reduction", r.reduction()},
          {"foreground_fraction", r.foreground_fraction}};
}

int cmd_run(const Globals & g)
{
  if (g.config.empty() || g.out.empty()) {
    throw UsageError("run needs --config and --out");
  }
  const auto rc = semfuse::io::load_run_config(g.config);
  const auto r = semfuse::run_pipeline(rc.inputs, g.dump_stages);
  const fs::path out(g.out);
  fs::create_directories(out);
  semfuse::io::write_bev(out / "fused.bev", r.fused);
  json report = run_report(rc, r);
  if (rc.proposals) {
    const auto boxes = semfuse::propose(r.fused, *rc.proposals);
    semfuse::io::write_boxes(out / "detections.txt", boxes);
    report["proposals"] = boxes.size();
  }
  if (g.dump_stages) {
    semfuse::io::write_painted_cloud(out / "painted.bin", *r.dumps.painted);
    semfuse::io::write_bev(out / "lidar.bev", *r.dumps.lidar_bev);
    semfuse::io::write_bev(out / "camera.bev", *r.dumps.camera_bev);
  }
  semfuse::io::write_json(out / "report.json", report);
  std::cout << "pseudo_points " << r.points_lifted << " -> " << r.points_after_mask << " reduction " << fmt(100.0 * r.reduction(), 2)
            << "%\n";
  for (const auto & t : r.timings) {
    std::cout << "  " << t.stage << " " << fmt(t.seconds * 1e3, 2) << " ms\n";
  }
  return kOk;
}

int cmd_eval(const Globals & g, const std::string & dets_path, const std::string & gts_path)
{
  semfuse::EvalConfig cfg;
  if (!g.config.empty()) {
    cfg = semfuse::io::eval_config_from_json(semfuse::io::read_json(g.config));
  }
  const auto dets = semfuse::io::read_boxes(dets_path);
  const auto gts = semfuse::io::read_boxes(gts_path);
  const auto report = semfuse::evaluate(dets, gts, cfg);
  const auto ranges = semfuse::range_binned_eval(dets, gts, cfg);
  print_report(report, ranges);
  if (!g.out.empty()) {
    json bins = json::array();
    for (const auto & b : ranges.bins) {
      bins.push_back({{"lo", b.bin.lo}, {"hi", b.bin.hi}, {"report", report_json(b.report)}});
    }
    json j = report_json(report);
    j["ranges"] = {{"whole", {{"lo", ranges.whole.lo}, {"hi", ranges.whole.hi}, {"report", report_json(ranges.whole_report)}}}, {"bins", bins}};
    fs::create_directories(fs::path(g.out));
    semfuse::io::write_json(fs::path(g.out) / "eval.json", j);
  }
  return kOk;
}

double percentile(std::vector<double> v, double q)
{
  std::sort(v.begin(), v.end());
  // Nearest-rank.
  const auto rank = static_cast<std::size_t>(std::ceil(q * static_cast<double>(v.size())));
  return v[std::clamp<std::size_t>(rank, 1, v.size()) - 1];
}

int cmd_bench(const Globals & g, int repetitions)
{
  if (repetitions < 3) {
    throw UsageError("bench needs --repetitions >= 3");
  }
  if (g.config.empty()) {
    throw UsageError("bench needs --config");
  }
  auto rc = semfuse::io::load_run_config(g.config);
  json out = json::object();
  std::cout << "variant   stage      median_ms  p95_ms\n";
  for (const auto & [name, mode] : {std::pair{"unmasked", semfuse::ViewMode::kAttention}, std::pair{"masked", semfuse::ViewMode::kAttentionSemanticMask}}) {
    rc.inputs.mode = mode;
    std::map<std::string, std::vector<double>> per_stage;
    std::vector<double> total;
    semfuse::PipelineResult last;
    for (int rep = 0; rep < repetitions; ++rep) {
      last = semfuse::run_pipeline(rc.inputs);
      double sum = 0.0;
      for (const auto & t : last.timings) {
        per_stage[t.stage].push_back(t.seconds);
        sum += t.seconds;
      }
      total.push_back(sum);
    }
    json stages = json::object();
    for (const auto & [stage, times] : per_stage) {
      const double med = percentile(times, 0.5);
      const double p95 = percentile(times, 0.95);
      stages[stage] = {{"median_s", med}, {"p95_s", p95}};
      std::cout << name << "  " << stage << "  " << fmt(med * 1e3, 3) << "  " << fmt(p95 * 1e3, 3) << '\n';
    }
    const double pool_med = percentile(per_stage["pool"], 0.5);
    const double throughput = pool_med > 0.0 ? static_cast<double>(last.points_pooled) / pool_med : 0.0;
    std::cout << name << "  pooled_points " << last.points_pooled << "  throughput " << fmt(throughput, 0) << " points/s\n";
    out[name] = {{"stages", stages}, {"total_median_s", percentile(total, 0.5)}, {"pooled_points", last.points_pooled},
                 {"pooled_points_per_s", throughput}, {"pseudo_points_after_mask", last.points_after_mask}};
  }
  const double ratio = static_cast<double>(out["masked"]["pooled_points"].get<std::size_t>()) /
                       std::max<double>(1.0, static_cast<double>(out["unmasked"]["pooled_points"].get<std::size_t>()));
  out["pooled_ratio"] = ratio;
  std::cout << "pooled_ratio " << fmt(ratio, 4) << '\n';
  if (!g.out.empty()) {
    fs::create_directories(fs::path(g.out));
    semfuse::io::write_json(fs::path(g.out) / "bench.json", out);
  }
  return kOk;
}

}  // namespace

int main(int argc, char ** argv)
{
  CLI::App app{"semfuse: camera-LiDAR BEV fusion, evaluation and synthetic scenes"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("-c,--config", g.config, "Config document (scene, pipeline or eval, per subcommand)");
  app.add_option("-o,--out", g.out, "Output directory");
  app.add_flag("-v,--verbose", g.verbosity, "More logging on stderr");
  app.add_flag("--dump-stages", g.dump_stages, "run: also write painted cloud and per-stream BEV grids");
  app.add_option("--threads", g.threads, "Worker threads (overrides " + std::string(semfuse::kThreadsEnv) + ")")->check(CLI::PositiveNumber);

  auto * synth = app.add_subcommand("synth", "Generate a synthetic scene");
  auto * run = app.add_subcommand("run", "Run the fusion pipeline");
  auto * eval = app.add_subcommand("eval", "Evaluate detections against ground truth");
  std::string dets_path, gts_path;
  eval->add_option("detections", dets_path, "Detections text file")->required();
  eval->add_option("ground_truth", gts_path, "Ground-truth text file")->required();
  auto * bench = app.add_subcommand("bench", "Time masked vs unmasked lifting");
  int repetitions = 5;
  bench->add_option("-n,--repetitions", repetitions, "Repetitions (>= 3)");
  for (auto * sub : {synth, run, eval, bench}) {
    sub->fallthrough();
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError & e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }
  if (g.threads > 0) {
    setenv(semfuse::kThreadsEnv, std::to_string(g.threads).c_str(), 1);
  }

  try {
    if (synth->parsed()) {
      return cmd_synth(g);
    }
    if (run->parsed()) {
      return cmd_run(g);
    }
    if (eval->parsed()) {
      return cmd_eval(g, dets_path, gts_path);
    }
    return cmd_bench(g, repetitions);
  } catch (const UsageError & e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const semfuse::ContractError & e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kContract;
  } catch (const semfuse::ParseError & e) {
    std::cerr << "parse error: " << e.what() << '\n';
    return kParse;
  } catch (const std::exception & e) {
    std::cerr << "error: " << e.what() << '\n';
    return kParse;
  }
}
