#pragma once

#include "imreg/core.hpp"
#include "imreg/matching.hpp"
#include "imreg/meta_update.hpp"
#include "imreg/refinement.hpp"

#include <cstdint>
#include <map>
#include <vector>

namespace imreg {

struct PipelineConfig {
  int top_k = 10;
  double tau = 0.07;
  double overlap_threshold = 0.30;
  int fusion_neighbors = 3;
  double pooling_exponent = 3.0;
  RansacConfig ransac;  // its inlier threshold and seed are taken from tau / seed
  int correspondence_cap = 5000;
  MergeMode merge_mode = MergeMode::reservoir;
  std::uint64_t seed = 42;
  int max_deferral_passes = 3;
  int averaging_iterations = 10;
  double averaging_convergence = 1e-3;
  int threads = 1;

  void validate() const;
  RansacConfig effective_ransac() const;
  RefinementConfig refinement() const;
};

struct CandidateAttempt {
  FrameId frame;
  int inlier_count;
  int correspondence_count;
  bool ok;
};

struct StepDiagnostics {
  FrameId frame = -1;  // merged frame, -1 when every candidate failed
  int pass = 0;
  int inlier_count = 0;
  std::vector<CandidateAttempt> candidates;
  std::vector<std::pair<FrameId, double>> overlaps;  // against every merged frame
  std::vector<std::pair<FrameId, double>> weights;   // observations used for averaging
  double seconds = 0.0;  // wall clock; not part of the deterministic result
};

struct SceneResult {
  FrameId seed = -1;
  std::map<FrameId, Pose> poses;  // absolute: inverse of frame -> meta
  std::vector<FrameId> order;
  std::vector<StepDiagnostics> steps;
  std::vector<FrameId> failed;
  MetaShape meta;

  bool complete() const { return failed.empty(); }
};

/// Global features for every frame: the frame's own when supplied, pooled
/// descriptors otherwise. Fused with the configured neighbour count.
std::vector<Eigen::VectorXd> scene_features(const std::vector<Frame>& frames, const PipelineConfig& cfg);

/// Incremental registration of an unordered frame set. Frame ids must be
/// unique; frames are processed in ascending id order.
SceneResult register_scene(std::vector<Frame> frames, const PipelineConfig& cfg);

/// Pairwise debug path: maps `b` into the coordinates of `a`.
PairwiseEstimate register_pair(const Frame& a, const Frame& b, const PipelineConfig& cfg);

}  // namespace imreg
