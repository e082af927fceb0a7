#include "imreg/pipeline.hpp"

#include "imreg/error.hpp"
#include "imreg/log.hpp"
#include "imreg/random.hpp"
#include "imreg/retrieval.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace imreg {

void PipelineConfig::validate() const {
  if (top_k < 1) throw InvalidArgument("top_k must be >= 1");
  if (!(tau > 0.0)) throw InvalidArgument("tau must be > 0");
  if (!(overlap_threshold > 0.0)) throw InvalidArgument("overlap threshold must be > 0");
  if (fusion_neighbors < 0) throw InvalidArgument("fusion neighbours must be >= 0");
  if (!(pooling_exponent > 0.0)) throw InvalidArgument("pooling exponent must be > 0");
  if (correspondence_cap < 3) throw InvalidArgument("correspondence cap must be >= 3");
  if (max_deferral_passes < 1) throw InvalidArgument("max deferral passes must be >= 1");
  if (threads < 1) throw InvalidArgument("threads must be >= 1");
  effective_ransac().validate();
  refinement().validate();
}

RansacConfig PipelineConfig::effective_ransac() const {
  RansacConfig r = ransac;
  r.inlier_threshold = tau;
  r.seed = seed;
  return r;
}

RefinementConfig PipelineConfig::refinement() const {
  return {overlap_threshold, tau, averaging_iterations, averaging_convergence};
}

std::vector<Eigen::VectorXd> scene_features(const std::vector<Frame>& frames, const PipelineConfig& cfg) {
  std::vector<Eigen::VectorXd> pooled;
  pooled.reserve(frames.size());
  for (const Frame& f : frames)
    pooled.push_back(f.global_feature() ? *f.global_feature()
                                        : pool_global(f.descriptors(), cfg.pooling_exponent));
  for (const auto& g : pooled)
    if (g.size() != pooled.front().size())
      throw InvalidArgument("global features have differing dimensions");
  return fuse_features(pooled, cfg.fusion_neighbors);
}

SceneResult register_scene(std::vector<Frame> frames, const PipelineConfig& cfg) {
  cfg.validate();
  if (frames.size() < 2) throw InvalidArgument("register_scene: need at least 2 frames");
  std::sort(frames.begin(), frames.end(), [](const Frame& a, const Frame& b) { return a.id() < b.id(); });
  for (std::size_t i = 1; i < frames.size(); ++i)
    if (frames[i].id() == frames[i - 1].id())
      throw InvalidArgument("register_scene: duplicate frame id " + std::to_string(frames[i].id()));
  for (const Frame& f : frames)
    if (f.dim() != frames.front().dim())
      throw InvalidArgument("register_scene: descriptor dimensions differ across frames");

  SimilarityState sim = build_similarity(scene_features(frames, cfg));
  const FrameId seed_index = select_seed(sim);

  SceneResult result;
  result.seed = frames[static_cast<std::size_t>(seed_index)].id();
  result.meta = MetaShape::from_seed(frames[static_cast<std::size_t>(seed_index)]);
  result.order.push_back(result.seed);
  sim = update_meta_row(std::move(sim), seed_index);
  log::info("seed frame {}", result.seed);

  const RansacConfig ransac = cfg.effective_ransac();
  const RefinementConfig refine_cfg = cfg.refinement();
  std::vector<bool> deferred(frames.size(), false);
  int stalled_passes = 0;

  while (!sim.all_merged()) {
    const auto started = std::chrono::steady_clock::now();
    const std::vector<FrameId> picks = top_k_candidates(sim, cfg.top_k, deferred);
    if (picks.empty()) {
      // every remaining frame failed against the current meta-shape
      if (++stalled_passes >= cfg.max_deferral_passes) break;
      log::info("retrying {} deferred frame(s), pass {}",
                std::count(deferred.begin(), deferred.end(), true), stalled_passes);
      deferred.assign(frames.size(), false);
      continue;
    }

    std::vector<const Frame*> candidates;
    for (FrameId idx : picks) candidates.push_back(&frames[static_cast<std::size_t>(idx)]);
    RansacConfig pass_ransac = ransac;
    if (stalled_passes > 0) pass_ransac.seed = mix_seed(cfg.seed, static_cast<std::uint64_t>(stalled_passes));
    const RerankResult rr =
        rerank_candidates(result.meta, candidates, pass_ransac, cfg.correspondence_cap, cfg.threads);

    StepDiagnostics step;
    step.pass = stalled_passes;
    for (const PairwiseEstimate& e : rr.estimates)
      step.candidates.push_back({e.candidate, e.inlier_count, e.correspondence_count, e.ok()});

    const PairwiseEstimate* win = rr.winner();
    if (win == nullptr) {
      for (FrameId idx : picks) deferred[static_cast<std::size_t>(idx)] = true;
      step.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
      result.steps.push_back(std::move(step));
      log::debug("all {} candidate(s) failed; deferring", picks.size());
      continue;
    }

    const auto index = static_cast<std::size_t>(
        std::find_if(frames.begin(), frames.end(), [&](const Frame& f) { return f.id() == win->candidate; }) -
        frames.begin());
    const Frame& frame = frames[index];
    const RefinementResult refined =
        refine_transform(result.meta, frame, *win->transform, refine_cfg, cfg.threads);
    const std::uint64_t merge_seed = mix_seed(cfg.seed, 0x4d455247ULL ^ static_cast<std::uint64_t>(frame.id()));
    result.meta = merge_frame(std::move(result.meta), frame, refined.pose, cfg.tau, cfg.merge_mode, merge_seed);
    sim = update_meta_row(std::move(sim), static_cast<FrameId>(index));
    result.order.push_back(frame.id());

    step.frame = frame.id();
    step.inlier_count = win->inlier_count;
    step.overlaps = refined.overlaps;
    for (const ObservedTransform& o : refined.observations) step.weights.emplace_back(o.frame, o.weight);
    step.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    log::info("merged frame {} (IC {}, {} observation(s), meta size {})", frame.id(), win->inlier_count,
              refined.observations.size(), result.meta.size());
    result.steps.push_back(std::move(step));

    deferred.assign(frames.size(), false);
    stalled_passes = 0;
  }

  for (std::size_t i = 0; i < frames.size(); ++i)
    if (!sim.merged[i]) result.failed.push_back(frames[i].id());
  for (const auto& [id, pose] : result.meta.frame_poses) result.poses.emplace(id, invert(pose));
  if (!result.failed.empty()) log::warn("{} frame(s) could not be registered", result.failed.size());
  return result;
}

PairwiseEstimate register_pair(const Frame& a, const Frame& b, const PipelineConfig& cfg) {
  cfg.validate();
  RansacConfig r = cfg.effective_ransac();
  r.seed ^= static_cast<std::uint64_t>(b.id());
  PairwiseEstimate est = ransac_estimate(match_descriptors(b, a, cfg.correspondence_cap), r);
  est.candidate = b.id();
  return est;
}

}  // namespace imreg
