#include "oracles.hpp"

#include "imreg/error.hpp"
#include "imreg/pipeline.hpp"
#include "imreg/synth_eval.hpp"

#include <doctest.h>

using namespace imreg;

namespace {

std::map<FrameId, Pose> gt_of(const std::vector<Frame>& frames) {
  std::map<FrameId, Pose> gt;
  for (const Frame& f : frames) gt.emplace(f.id(), *f.gt_pose());
  return gt;
}

SynthConfig small_scene() {
  SynthConfig c;
  c.frame_count = 4;
  c.points_per_frame = 250;
  c.seed = 7;
  return c;
}

}  // namespace

TEST_CASE("config validation") {
  PipelineConfig c;
  CHECK_NOTHROW(c.validate());
  c.top_k = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.tau = -1;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.threads = 0;
  CHECK_THROWS_AS(c.validate(), InvalidArgument);
  c = {};
  c.tau = 0.05;
  c.seed = 9;
  CHECK(c.effective_ransac().inlier_threshold == 0.05);
  CHECK(c.effective_ransac().seed == 9);
}

TEST_CASE("small scene registers completely and accurately") {
  const SyntheticScene scene = generate_scene(small_scene());
  const SceneResult r = register_scene(scene.frames, PipelineConfig{});
  CHECK(r.complete());
  CHECK(r.poses.size() == 4);
  CHECK(r.order.size() == 4);
  CHECK(r.order.front() == r.seed);
  CHECK(r.poses.at(r.seed).matrix() == Mat4::Identity());
  CHECK_NOTHROW(r.meta.validate());
  const ErrorReport rep = evaluate_poses(r.poses, gt_of(scene.frames), scene.overlap_graph);
  CHECK(rep.rr == 1.0);
  CHECK(rep.mean_te < 0.02);
}

TEST_CASE("input order and thread count do not change the result") {
  const SyntheticScene scene = generate_scene(small_scene());
  std::vector<Frame> shuffled(scene.frames.rbegin(), scene.frames.rend());
  PipelineConfig threaded;
  threaded.threads = 3;
  const SceneResult a = register_scene(scene.frames, PipelineConfig{});
  const SceneResult b = register_scene(shuffled, threaded);
  CHECK(a.order == b.order);
  for (const auto& [id, pose] : a.poses) CHECK(pose.matrix() == b.poses.at(id).matrix());
  CHECK(a.meta.points.size() == b.meta.points.size());
}

TEST_CASE("an unrelated frame is reported as failed") {
  SyntheticScene scene = generate_scene(small_scene());
  Rng rng(61);
  Descriptors d(scene.frames[0].dim(), 200);
  for (int i = 0; i < 200; ++i) {
    for (int k = 0; k < d.rows(); ++k) d(k, i) = rng.normal();
    d.col(i).normalize();
  }
  scene.frames.emplace_back(99, oracle::random_points(rng, 200, 3.0), d);
  const SceneResult r = register_scene(scene.frames, PipelineConfig{});
  CHECK(r.failed == std::vector<FrameId>{99});
  CHECK(r.poses.count(99) == 0);
  CHECK(r.poses.size() == 4);
}

TEST_CASE("scene input validation") {
  const SyntheticScene scene = generate_scene(small_scene());
  CHECK_THROWS_AS(register_scene({scene.frames[0]}, PipelineConfig{}), InvalidArgument);
  CHECK_THROWS_AS(register_scene({scene.frames[0], scene.frames[0]}, PipelineConfig{}), InvalidArgument);
}

TEST_CASE("pairwise registration of chain neighbours") {
  const SyntheticScene scene = generate_scene(small_scene());
  const auto& by_id = scene.frames;
  const Frame& a = by_id[static_cast<std::size_t>(scene.chain[0])];
  const Frame& b = by_id[static_cast<std::size_t>(scene.chain[1])];
  const PairwiseEstimate est = register_pair(a, b, PipelineConfig{});
  REQUIRE(est.ok());
  CHECK(est.candidate == b.id());
  // b -> a equals gt_a * gt_b^-1 (gt poses map world to frame)
  const Pose want = compose(*a.gt_pose(), invert(*b.gt_pose()));
  CHECK(rotation_error(est.transform->rotation(), want.rotation()) < 0.05);
  CHECK(translation_error(est.transform->translation(), want.translation()) < 0.05);
}
