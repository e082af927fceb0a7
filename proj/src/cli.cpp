#include "imreg/cli.hpp"

#include "imreg/error.hpp"
#include "imreg/io.hpp"
#include "imreg/log.hpp"
#include "imreg/pipeline.hpp"
#include "imreg/synth_eval.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numbers>

namespace imreg {

namespace {

namespace fs = std::filesystem;

struct Options {
  PipelineConfig pipeline;
  std::string merge_mode = "reservoir";

  std::string manifest;
  std::string out;
  std::string frame_a, frame_b;
  std::string desc_a, desc_b;
  std::string pred, gt, overlap_graph;
  std::string synth_config;
};

void add_pipeline_flags(CLI::App& cmd, Options& o) {
  PipelineConfig& p = o.pipeline;
  cmd.add_option("--tau", p.tau, "Inlier / redundancy distance threshold")->capture_default_str();
  cmd.add_option("--topk", p.top_k, "Candidates re-ranked per step")->capture_default_str();
  cmd.add_option("--fusion-neighbors", p.fusion_neighbors, "Neighbours fused into each global feature")
      ->capture_default_str();
  cmd.add_option("--overlap-threshold", p.overlap_threshold, "Minimum overlap for an averaging observation")
      ->capture_default_str();
  cmd.add_option("--ransac-iters", p.ransac.iterations, "RANSAC iterations")->capture_default_str();
  cmd.add_option("--min-inliers", p.ransac.min_inliers, "Inliers needed to accept an alignment")
      ->capture_default_str();
  cmd.add_option("--merge-mode", o.merge_mode, "Meta-shape merge mode")
      ->check(CLI::IsMember({"reservoir", "concat", "mean"}))
      ->capture_default_str();
  cmd.add_option("--seed", p.seed, "Random seed")->capture_default_str();
  cmd.add_option("--threads", p.threads, "Worker threads")->capture_default_str();
}

PipelineConfig finish_pipeline(Options& o) {
  o.pipeline.merge_mode = parse_merge_mode(o.merge_mode);
  o.pipeline.validate();
  return o.pipeline;
}

void write_order_log(const fs::path& path, const SceneResult& r) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << "seed " << r.seed << '\n';
  for (const StepDiagnostics& s : r.steps) {
    if (s.frame < 0) {
      out << "defer pass " << s.pass << " candidates";
      for (const CandidateAttempt& c : s.candidates) out << ' ' << c.frame << ':' << c.inlier_count;
      out << '\n';
      continue;
    }
    out << "merge " << s.frame << " pass " << s.pass << " inliers " << s.inlier_count << " observations "
        << s.weights.size() << " seconds " << std::fixed << std::setprecision(4) << s.seconds
        << std::defaultfloat << '\n';
  }
  for (FrameId f : r.failed) out << "failed " << f << '\n';
}

int cmd_register(Options& o) {
  const PipelineConfig cfg = finish_pipeline(o);
  if (!fs::exists(o.manifest)) throw Error("manifest not found: " + o.manifest);
  const io::Manifest manifest = io::read_manifest(o.manifest);
  SceneResult result = register_scene(io::load_scene(manifest), cfg);

  const fs::path out(o.out);
  fs::create_directories(out);
  io::write_json(out / "result.json", io::result_to_json(result, cfg, manifest.units));
  io::write_poses(out / "poses.txt", result.poses);
  io::write_meta_ply(out / "meta_shape.ply", result.meta);
  write_order_log(out / "order.log", result);

  std::cerr << "registered " << result.poses.size() << " of " << manifest.frames.size() << " frames into "
            << out.string() << '\n';
  return result.complete() ? 0 : 2;
}

Frame load_named_frame(const std::string& ply, const std::string& desc, FrameId id) {
  io::FrameFileSet files{ply, desc.empty() ? fs::path(ply).replace_extension(".desc") : fs::path(desc), std::nullopt};
  for (const fs::path& p : {files.keypoints, files.descriptors})
    if (!fs::exists(p)) throw Error("file not found: " + p.string());
  return io::load_frame(files, id);
}

int cmd_pairwise(Options& o) {
  const PipelineConfig cfg = finish_pipeline(o);
  const Frame a = load_named_frame(o.frame_a, o.desc_a, 0);
  const Frame b = load_named_frame(o.frame_b, o.desc_b, 1);
  const PairwiseEstimate est = register_pair(a, b, cfg);
  io::json j = io::estimate_to_json(est);
  j["config"] = io::to_json(cfg);
  if (o.out.empty()) std::cout << j.dump(2) << '\n';
  else io::write_json(o.out, j);
  return est.ok() ? 0 : 2;
}

std::map<FrameId, Pose> load_pose_file(const std::string& path) {
  if (!fs::exists(path)) throw Error("pose file not found: " + path);
  if (fs::path(path).extension() == ".json") return io::poses_from_result_json(io::read_json(path));
  return io::read_poses(path);
}

int cmd_eval(Options& o) {
  const EvalConfig cfg;
  const auto pred = load_pose_file(o.pred);
  const auto gt = load_pose_file(o.gt);
  std::optional<std::vector<OverlapEdge>> graph;
  if (!o.overlap_graph.empty()) {
    if (!fs::exists(o.overlap_graph)) throw Error("overlap graph not found: " + o.overlap_graph);
    graph = io::read_overlap_graph(o.overlap_graph);
  }
  const ErrorReport report = evaluate_poses(pred, gt, graph, cfg);
  const io::json j = io::report_to_json(report, cfg);
  if (o.out.empty()) std::cout << j.dump(2) << '\n';
  else io::write_json(o.out, j);

  std::cerr << "pairs " << report.pairs.size() << " missing " << report.missing.size() << '\n';
  std::cerr << "RE(deg) ";
  for (double t : cfg.re_thresholds_deg) std::cerr << std::setw(7) << t;
  std::cerr << "\necdf    ";
  for (double v : report.re_ecdf) std::cerr << std::setw(7) << std::setprecision(3) << v;
  std::cerr << "\nTE      ";
  for (double t : cfg.te_thresholds) std::cerr << std::setw(7) << t;
  std::cerr << "\necdf    ";
  for (double v : report.te_ecdf) std::cerr << std::setw(7) << std::setprecision(3) << v;
  std::cerr << "\nRR " << report.rr << " mean RE(deg) " << report.mean_re * 180.0 / std::numbers::pi
            << " mean TE " << report.mean_te << '\n';
  return 0;
}

int cmd_synth(Options& o) {
  if (!fs::exists(o.synth_config)) throw Error("synth config not found: " + o.synth_config);
  const io::json j = io::read_json(o.synth_config);
  const std::string scenario = j.value("scenario", std::string("default"));
  SyntheticScene scene;
  io::json echo;
  if (scenario == "aisle") {
    for (const auto& [key, v] : j.items())
      if (key != "scenario" && key != "seed") throw InvalidArgument("synth config: aisle takes only 'seed'");
    const std::uint64_t seed = j.value("seed", std::uint64_t{42});
    scene = generate_aisle_scene(seed);
    echo = {{"scenario", "aisle"}, {"seed", seed}};
  } else if (scenario == "default") {
    const SynthConfig cfg = io::synth_config_from_json(j);
    scene = generate_scene(cfg);
    echo = io::to_json(cfg);
    echo["scenario"] = "default";
  } else {
    throw InvalidArgument("synth config: unknown scenario '" + scenario + "'");
  }
  io::write_scene(o.out, scene);
  io::write_json(fs::path(o.out) / "synth_config.json", echo);
  std::cerr << "wrote " << scene.frames.size() << " frames to " << o.out << '\n';
  return 0;
}

}  // namespace

int run_cli(int argc, char** argv) {
  log::reload_level();
  CLI::App app{"Incremental multiview point cloud registration", "imreg"};
  app.require_subcommand(1);
  Options o;

  CLI::App* reg = app.add_subcommand("register", "Register every frame of a manifest");
  reg->add_option("manifest", o.manifest, "Scene manifest (JSON)")->required();
  reg->add_option("--out", o.out, "Output directory")->required();
  add_pipeline_flags(*reg, o);

  CLI::App* pair = app.add_subcommand("pairwise", "Align frame b into frame a");
  pair->add_option("a", o.frame_a, "Keypoint PLY of frame a")->required();
  pair->add_option("b", o.frame_b, "Keypoint PLY of frame b")->required();
  pair->add_option("--desc-a", o.desc_a, "Descriptor file of a (default: <a>.desc)");
  pair->add_option("--desc-b", o.desc_b, "Descriptor file of b (default: <b>.desc)");
  pair->add_option("--out", o.out, "Write the estimate JSON here instead of stdout");
  add_pipeline_flags(*pair, o);

  CLI::App* ev = app.add_subcommand("eval", "Compare predicted and ground-truth poses");
  ev->add_option("--pred", o.pred, "Predicted poses (text, or result JSON)")->required();
  ev->add_option("--gt", o.gt, "Ground-truth poses")->required();
  ev->add_option("--overlap-graph", o.overlap_graph, "Overlap graph restricting evaluated pairs");
  ev->add_option("--out", o.out, "Write the report here instead of stdout");

  CLI::App* syn = app.add_subcommand("synth", "Generate a synthetic scene");
  syn->add_option("--config", o.synth_config, "Scene configuration (JSON)")->required();
  syn->add_option("--out", o.out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  }

  try {
    if (*reg) return cmd_register(o);
    if (*pair) return cmd_pairwise(o);
    if (*ev) return cmd_eval(o);
    if (*syn) return cmd_synth(o);
  } catch (const std::exception& e) {
    log::error("{}", e.what());
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}

}  // namespace imreg
