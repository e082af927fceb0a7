// Acceptance suite: one PASS/FAIL line per criterion.
// Usage: acceptance [--known-blocked N]... [path-to-imreg-cli]
// Exits 1 when any criterion fails, unless every failure is listed with
// --known-blocked (those still print FAIL).

#include "oracles.hpp"

#include "imreg/io.hpp"
#include "imreg/meta_update.hpp"
#include "imreg/pipeline.hpp"
#include "imreg/refinement.hpp"
#include "imreg/retrieval.hpp"
#include "imreg/synth_eval.hpp"

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <unistd.h>

namespace fs = std::filesystem;
using namespace imreg;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v) {
  std::ostringstream ss;
  ss << std::setprecision(3) << v;
  return ss.str();
}

std::string cli_path;

fs::path scratch_dir() {
  static const fs::path dir = fs::temp_directory_path() / ("imreg_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(dir);
  return dir;
}

int run(const std::string& cmd) {
  const int status = std::system((cmd + " 2>/dev/null").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// 1 -------------------------------------------------------------------------
Outcome procrustes_exactness() {
  const auto start = Clock::now();
  Rng rng(1);
  double max_r = 0.0, max_t = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 r = oracle::uniform_rotation(rng);
    const Vec3 t(rng.uniform(-5, 5), rng.uniform(-5, 5), rng.uniform(-5, 5));
    const Points src = oracle::random_points(rng, 50, 2.0);
    const Points dst = (r * src).colwise() + t;
    const Pose est = procrustes(src, dst);
    max_r = std::max(max_r, (est.rotation() - r).norm());
    max_t = std::max(max_t, (est.translation() - t).norm());
  }
  const double secs = seconds_since(start);
  return {max_r < 1e-9 && max_t < 1e-9 && secs < 1.0,
          "max rotation err " + fmt(max_r) + ", max translation err " + fmt(max_t) + ", " + fmt(secs) + " s"};
}

// 2 -------------------------------------------------------------------------
Outcome rotation_averaging_oracle() {
  const auto start = Clock::now();
  Rng rng(2);
  const double ten_deg = 10.0 * M_PI / 180.0;
  double max_gap = 0.0, max_orth = 0.0, max_converged_gap = 0.0;
  int over = 0;
  RefinementConfig converged;
  converged.max_iterations = 100000;
  converged.convergence = 1e-15;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 base = oracle::uniform_rotation(rng);
    std::vector<ObservedTransform> obs;
    std::vector<Mat3> rots;
    std::vector<double> weights;
    for (int i = 0; i < 5; ++i) {
      const Mat3 r = oracle::random_rotation(rng, ten_deg) * base;
      const double w = rng.uniform(0.05, 1.0);
      obs.push_back({i, r, Vec3::Zero(), w});
      rots.push_back(r);
      weights.push_back(w);
    }
    const Mat3 init = oracle::random_rotation(rng, ten_deg) * base;
    const Mat3 got = rotation_average(init, obs, RefinementConfig{});
    const Mat3 want = oracle::weighted_median_rotation(rots, weights);
    max_gap = std::max(max_gap, (got - want).norm());
    over += (got - want).norm() >= 1e-3 ? 1 : 0;
    // diagnostic only: the same iteration without the 10-step budget
    max_converged_gap = std::max(max_converged_gap, (rotation_average(init, obs, converged) - want).norm());
    max_orth = std::max({max_orth, (got.transpose() * got - Mat3::Identity()).norm(), std::abs(got.determinant() - 1.0)});
  }
  const double secs = seconds_since(start);
  return {max_gap < 1e-3 && max_orth < 1e-9 && secs < 2.0,
          "max Frobenius gap to oracle " + fmt(max_gap) + " (" + std::to_string(over) +
              "/100 trials >= 1e-3), max SO(3) defect " + fmt(max_orth) + ", " + fmt(secs) +
              " s; unbudgeted iteration gap " + fmt(max_converged_gap)};
}

// 3 -------------------------------------------------------------------------
Outcome translation_averaging() {
  Rng rng(3);
  double consistent = 0.0, general = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    // consistent: every observation is the ground-truth pose itself, or agrees
    // with it under the model t_i = R_i Rbar^T t
    const Mat3 r_gt = oracle::uniform_rotation(rng);
    const Vec3 t_gt(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
    std::vector<ObservedTransform> same, model;
    const Mat3 rbar = oracle::random_rotation(rng, 0.2) * r_gt;
    for (int i = 0; i < 3; ++i) {
      const double w = rng.uniform(0.3, 1.0);
      same.push_back({i, r_gt, t_gt, w});
      const Mat3 ri = oracle::random_rotation(rng, 0.2) * r_gt;
      model.push_back({i, ri, ri * rbar.transpose() * t_gt, w});
    }
    consistent = std::max(consistent, (translation_average(r_gt, same) - t_gt).norm());
    consistent = std::max(consistent, (translation_average(rbar, model) - t_gt).norm());

    std::vector<ObservedTransform> obs;
    for (int i = 0; i < 3; ++i)
      obs.push_back({i, oracle::uniform_rotation(rng), Vec3(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3)),
                     rng.uniform(0.3, 1.0)});
    const Mat3 rb = oracle::uniform_rotation(rng);
    general = std::max(general, (translation_average(rb, obs) - oracle::translation_normal_equations(rb, obs)).norm());
  }
  return {consistent < 1e-9 && general < 1e-9,
          "consistent err " + fmt(consistent) + ", max gap to normal-equation oracle " + fmt(general)};
}

// 4 -------------------------------------------------------------------------
Outcome reservoir_property() {
  const auto start = Clock::now();
  std::vector<Frame> frames;
  Eigen::VectorXd d = Eigen::VectorXd::Zero(4);
  d(0) = 1.0;
  for (int k = 0; k < 5; ++k) frames.emplace_back(k, Points(Vec3(0.5, -0.25, 1.0)), Descriptors(d));

  const int trials = 20000;
  std::vector<int> survivors(5, 0);
  bool coverage_ok = true;
  for (int trial = 0; trial < trials; ++trial) {
    MetaShape meta = MetaShape::from_seed(frames[0]);
    for (int k = 1; k < 5; ++k)
      meta = reservoir_merge(std::move(meta), frames[static_cast<std::size_t>(k)], Pose::identity(), 0.07,
                             mix_seed(static_cast<std::uint64_t>(trial), static_cast<std::uint64_t>(k)));
    coverage_ok = coverage_ok && meta.points.size() == 1 && meta.points[0].coverage == 5;
    ++survivors[static_cast<std::size_t>(meta.points[0].origin_frame)];
  }
  double max_dev = 0.0, chi2 = 0.0;
  const double expected = trials / 5.0;
  std::string freqs;
  for (int c : survivors) {
    max_dev = std::max(max_dev, std::abs(c / static_cast<double>(trials) - 0.2));
    chi2 += (c - expected) * (c - expected) / expected;
    freqs += fmt(c / static_cast<double>(trials)) + " ";
  }
  const double p = oracle::chi_square_sf_even(chi2, 4);

  bool exact = true;
  for (int c = 1; c <= 100; ++c) exact = exact && keep_new_probability(c) == 1.0 / (c + 1.0);
  const double secs = seconds_since(start);
  return {max_dev <= 0.02 && p > 0.01 && exact && coverage_ok && secs < 10.0,
          "survival " + freqs + "(max dev " + fmt(max_dev) + "), chi2 p " + fmt(p) +
              (exact ? ", keep-new exact" : ", keep-new MISMATCH") + (coverage_ok ? "" : ", coverage wrong") + ", " +
              fmt(secs) + " s"};
}

// 5 -------------------------------------------------------------------------
Outcome similarity_algebra() {
  Rng rng(5);
  bool range_ok = true, sym_ok = true;
  for (int set = 0; set < 1000; ++set) {
    const int n = 2 + static_cast<int>(rng.index(15));
    const int dim = 2 + static_cast<int>(rng.index(63));
    std::vector<GlobalFeature> g;
    for (int i = 0; i < n; ++i) {
      Eigen::VectorXd v(dim);
      for (int k = 0; k < dim; ++k) v(k) = rng.normal();
      g.push_back(v.normalized());
    }
    const Eigen::MatrixXd s = build_similarity(g).matrix;
    range_ok = range_ok && (s.array() >= 0.0).all() && (s.array() <= 1.0).all();
    sym_ok = sym_ok && s == s.transpose();
  }

  SimilarityState hand;
  hand.matrix.resize(3, 3);
  hand.matrix << 1.0, 0.6, 0.3, 0.6, 1.0, 0.1, 0.3, 0.1, 1.0;
  hand.meta_row = Eigen::Vector3d(0.2, 0.5, 0.4);
  hand.merged = {false, false, false};
  const Eigen::VectorXd got = update_meta_row(hand, 1).meta_row;
  const bool hand_ok = got == Eigen::Vector3d(0.6, 0.0, 0.4);
  std::ostringstream ss;
  ss << "range " << (range_ok ? "ok" : "VIOLATED") << ", symmetry " << (sym_ok ? "ok" : "VIOLATED")
     << ", hand case (" << got.transpose() << ")";
  return {range_ok && sym_ok && hand_ok, ss.str()};
}

// 6 -------------------------------------------------------------------------
Outcome overlap_oracle() {
  Rng rng(6);
  const double tau = 0.07;
  int matches = 0;
  for (int c = 0; c < 50; ++c) {
    const Points p_i = oracle::random_points(rng, 100, 0.6);
    const Pose t(oracle::uniform_rotation(rng), Vec3(rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)));
    Points p_j = oracle::random_points(rng, 100, 0.6);
    for (int k = 0; k < 50; ++k)
      p_j.col(k) = t.apply(Vec3(p_i.col(k))) + 0.04 * Vec3(rng.normal(), rng.normal(), rng.normal());
    const double got = overlap_ratio(p_i, p_j, t, tau);
    const long hits = oracle::overlap_count(p_i, p_j, t, tau);
    if (got == static_cast<double>(hits) / 200.0) ++matches;
  }
  const Points cloud = oracle::random_points(rng, 100, 1.0);
  const double same = overlap_ratio(cloud, cloud, Pose::identity(), tau);
  const double far = overlap_ratio(cloud, cloud, Pose(Mat3::Identity(), Vec3(100, 0, 0)), tau);
  return {matches == 50 && same == 1.0 && far == 0.0,
          std::to_string(matches) + "/50 exact matches, identical " + fmt(same) + ", far " + fmt(far)};
}

// 7 -------------------------------------------------------------------------
Outcome end_to_end() {
  const SyntheticScene scene = generate_scene(SynthConfig{});
  double min_chain = 1.0;
  for (std::size_t k = 0; k + 1 < scene.chain.size(); ++k)
    for (const OverlapEdge& e : scene.overlap_graph)
      if (std::minmax(e.a, e.b) == std::minmax(scene.chain[k], scene.chain[k + 1])) min_chain = std::min(min_chain, e.overlap);

  const auto start = Clock::now();
  const SceneResult result = register_scene(scene.frames, PipelineConfig{});
  const double secs = seconds_since(start);

  std::map<FrameId, Pose> gt;
  for (const Frame& f : scene.frames) gt.emplace(f.id(), *f.gt_pose());
  EvalConfig ec;
  ec.min_overlap = 0.0;
  const ErrorReport rep = evaluate_poses(result.poses, gt, scene.overlap_graph, ec);
  const double re_deg = rep.mean_re * 180.0 / M_PI;
  return {scene.frames.size() == 8 && min_chain >= 0.30 && result.complete() && rep.rr == 1.0 && re_deg < 1.0 &&
              rep.mean_te < 0.02 && secs < 30.0,
          "8 frames, min chained overlap " + fmt(min_chain) + ", RR " + fmt(rep.rr) + " over " +
              std::to_string(rep.pairs.size() + rep.missing.size()) + " pairs, mean re " + fmt(re_deg) +
              " deg, mean te " + fmt(rep.mean_te) + ", " + fmt(secs) + " s"};
}

// 8 -------------------------------------------------------------------------
Outcome aisle_scenario() {
  const SyntheticScene scene = generate_aisle_scene(42);
  const PipelineConfig cfg;
  // frames 0 and 2 share the structured region; frame 1 only sees the walls
  const PairwiseEstimate pair = register_pair(scene.frames[0], scene.frames[1], cfg);
  const bool pair_fails = !pair.ok() && pair.inlier_count < cfg.ransac.min_inliers;

  const SceneResult result = register_scene(scene.frames, cfg);
  std::map<FrameId, Pose> gt;
  for (const Frame& f : scene.frames) gt.emplace(f.id(), *f.gt_pose());
  const ErrorReport rep = evaluate_poses(result.poses, gt, std::nullopt);
  const bool order_ok = result.order.size() == 3 && std::set<FrameId>{result.order[0], result.order[1]} == std::set<FrameId>{0, 2} &&
                        result.order[2] == 1;

  // the same order must be visible in the CLI's order log
  std::string log_order = "n/a";
  bool log_ok = true;
  if (!cli_path.empty()) {
    const fs::path dir = scratch_dir() / "aisle";
    std::ofstream(scratch_dir() / "aisle.json") << R"({"scenario": "aisle", "seed": 42})";
    const int rc_synth = run(cli_path + " synth --config " + (scratch_dir() / "aisle.json").string() + " --out " + dir.string());
    const int rc_reg = run(cli_path + " register " + (dir / "manifest.json").string() + " --out " + (dir / "out").string());
    std::ifstream log(dir / "out" / "order.log");
    std::vector<FrameId> merged;
    std::string word;
    FrameId id;
    while (log >> word) {
      if ((word == "seed" || word == "merge") && log >> id) merged.push_back(id);
      std::getline(log, word);
    }
    log_order.clear();
    for (FrameId f : merged) log_order += std::to_string(f) + " ";
    log_ok = rc_synth == 0 && rc_reg == 0 && merged == result.order;
  }

  std::string order;
  for (FrameId f : result.order) order += std::to_string(f) + " ";
  return {pair_fails && result.complete() && rep.rr == 1.0 && rep.pairs.size() == 3 && order_ok && log_ok,
          "pair(0,1) IC " + std::to_string(pair.inlier_count) + (pair.ok() ? " (accepted)" : " (rejected)") +
              ", scene RR " + fmt(rep.rr) + " over " + std::to_string(rep.pairs.size()) + " pairs, order " + order +
              "(log: " + log_order + ")"};
}

// 9 -------------------------------------------------------------------------
Outcome merge_ablation() {
  const SynthConfig sc;
  const SyntheticScene scene = generate_scene(sc);
  PipelineConfig res_cfg, cat_cfg;
  cat_cfg.merge_mode = MergeMode::concat;
  const SceneResult res = register_scene(scene.frames, res_cfg);
  const SceneResult cat = register_scene(scene.frames, cat_cfg);
  const double radius = 4.0 * res_cfg.tau;
  const double v_res = overlap_spacing_variance(res.meta, radius);
  const double v_cat = overlap_spacing_variance(cat.meta, radius);
  return {res.complete() && cat.complete() && res.meta.points.size() <= cat.meta.points.size() && v_res <= v_cat,
          "points " + std::to_string(res.meta.points.size()) + " vs " + std::to_string(cat.meta.points.size()) +
              ", overlap spacing variance " + fmt(v_res) + " vs " + fmt(v_cat)};
}

// 10 ------------------------------------------------------------------------
Outcome determinism() {
  if (cli_path.empty()) return {false, "no CLI binary given"};
  const fs::path dir = scratch_dir() / "det";
  std::ofstream(scratch_dir() / "det.json") << R"({"seed": 42})";
  int rc = run(cli_path + " synth --config " + (scratch_dir() / "det.json").string() + " --out " + dir.string());
  for (const char* out : {"out1", "out2"})
    rc |= run(cli_path + " register " + (dir / "manifest.json").string() + " --out " + (dir / out).string() +
              " --seed 42 --threads 1");
  const bool json_same = slurp(dir / "out1" / "result.json") == slurp(dir / "out2" / "result.json") &&
                         !slurp(dir / "out1" / "result.json").empty();
  const bool ply_same = slurp(dir / "out1" / "meta_shape.ply") == slurp(dir / "out2" / "meta_shape.ply") &&
                        !slurp(dir / "out1" / "meta_shape.ply").empty();
  return {rc == 0 && json_same && ply_same, std::string("exit codes ") + (rc == 0 ? "0" : "nonzero") +
                                                ", result.json " + (json_same ? "identical" : "DIFFERS") +
                                                ", meta_shape.ply " + (ply_same ? "identical" : "DIFFERS")};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::size_t> known_blocked;
  for (int a = 1; a < argc; ++a) {
    const std::string arg = argv[a];
    if (arg == "--known-blocked" && a + 1 < argc) known_blocked.insert(std::stoul(argv[++a]));
    else cli_path = arg;
  }
  if (cli_path.empty())
    if (const char* env = std::getenv("IMREG_CLI")) cli_path = env;

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"Procrustes exactness", procrustes_exactness},
      {"Rotation averaging oracle", rotation_averaging_oracle},
      {"Translation averaging", translation_averaging},
      {"Reservoir property", reservoir_property},
      {"Similarity algebra", similarity_algebra},
      {"Overlap ratio", overlap_oracle},
      {"End-to-end synthetic scene", end_to_end},
      {"Aisle scenario", aisle_scenario},
      {"Merge-mode ablation", merge_ablation},
      {"Determinism", determinism},
  };
  int failed = 0, unexpected = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += o.pass ? 0 : 1;
    unexpected += o.pass || known_blocked.count(i + 1) ? 0 : 1;
    std::cout << (o.pass ? "PASS" : "FAIL") << "  [" << (i + 1) << "] " << criteria[i].first << ": " << o.detail
              << (!o.pass && known_blocked.count(i + 1) ? " (known blocked)" : "") << std::endl;
  }
  std::cout << (criteria.size() - static_cast<std::size_t>(failed)) << "/" << criteria.size() << " criteria passed"
            << std::endl;
  std::error_code ec;
  fs::remove_all(scratch_dir(), ec);
  return unexpected ? 1 : 0;
}
