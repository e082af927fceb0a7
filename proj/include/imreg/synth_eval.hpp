#pragma once

#include "imreg/core.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

namespace imreg {

// ---------------------------------------------------------------------------
// Synthetic scenes

struct SynthConfig {
  std::uint64_t seed = 42;
  int frame_count = 8;
  int points_per_frame = 400;
  /// Target overlap ratio between consecutive frames of the viewing chain.
  /// One entry per link, or a single entry used for every link.
  std::vector<double> overlap_schedule{0.4};
  double keypoint_noise = 0.01;
  int descriptor_dim = 32;
  double descriptor_noise = 0.05;
  double outlier_fraction = 0.1;
  Vec3 extent{6.0, 4.0, 2.5};  // room size
  /// Probability that a visible world keypoint is detected in a frame.
  double repeatability = 0.85;
  /// Registration threshold the scene is built for: descriptor cells are
  /// 2*tau wide and world keypoints are kept at least `min_spacing` apart.
  double tau = 0.07;
  double min_spacing = 0.12;

  void validate() const;
  double overlap(int link) const;
};

struct OverlapEdge {
  FrameId a;
  FrameId b;
  double overlap;  // overlap ratio under ground-truth poses
};

struct SyntheticScene {
  std::vector<Frame> frames;  // sorted by id; ground-truth poses attached
  std::vector<OverlapEdge> overlap_graph;  // every pair with nonzero overlap
  Points world;  // world keypoints
  std::vector<FrameId> chain;  // frame ids in viewing order
};

/// Unit descriptor hashed from the 2*tau cell containing a world point.
Eigen::VectorXd cell_descriptor(const Vec3& world, double cell_size, int dim);

/// Room shell plus clutter, seen by a chain of overlapping views. Frame ids
/// are a seeded permutation of the chain positions. Throws InvalidArgument
/// when the overlap schedule cannot be realised.
SyntheticScene generate_scene(const SynthConfig& cfg);

/// Three-frame aisle: frames 0 and 2 share a large structured region; frame
/// 1 overlaps each of them only on a mostly featureless wall (10 distinctive
/// keypoints per wall, the rest with uninformative descriptors), the two
/// walls being perpendicular.
SyntheticScene generate_aisle_scene(std::uint64_t seed = 42);

/// Ground-truth overlap ratio for every frame pair (gt poses required).
std::vector<OverlapEdge> overlap_graph(const std::vector<Frame>& frames, double tau);

// ---------------------------------------------------------------------------
// Metrics

/// arccos((tr(pred^T gt) - 1) / 2), argument clamped to [-1, 1].
double rotation_error(const Mat3& pred, const Mat3& gt);
double translation_error(const Vec3& pred, const Vec3& gt);

/// Fraction of errors <= each (ascending) threshold.
std::vector<double> ecdf(const std::vector<double>& errors, const std::vector<double>& thresholds);

struct PairError {
  FrameId a;
  FrameId b;
  double re;  // radians
  double te;
};

/// Fraction of pairs with te < te_threshold and re < re_threshold (radians).
/// Throws InvalidArgument on an empty set.
double registration_recall(const std::vector<PairError>& pairs, double re_threshold,
                           double te_threshold);

struct EvalConfig {
  double rr_translation = 0.2;
  double rr_rotation_deg = 15.0;
  std::vector<double> re_thresholds_deg{3, 5, 10, 30, 45};
  std::vector<double> te_thresholds{0.05, 0.1, 0.25, 0.5, 0.75};
  double min_overlap = 0.1;  // pair filter when an overlap graph is supplied
};

struct ErrorReport {
  std::vector<PairError> pairs;
  std::vector<std::pair<FrameId, FrameId>> missing;  // a prediction was absent
  double mean_re = 0, median_re = 0, mean_te = 0, median_te = 0;
  std::vector<double> re_ecdf;
  std::vector<double> te_ecdf;
  double rr = 0;
  double rr_translation_only = 0;
  double rr_rotation_only = 0;
};

/// Errors of relative transforms pose_a * pose_b^-1 recovered from absolute
/// poses. Pairs come from `graph` (overlap > min_overlap) when given, else
/// every pair present in `gt`. Missing predictions count as failures in RR.
ErrorReport evaluate_poses(const std::map<FrameId, Pose>& pred, const std::map<FrameId, Pose>& gt,
                           const std::optional<std::vector<OverlapEdge>>& graph,
                           const EvalConfig& cfg = {});

/// Variance of nearest-neighbour spacing among meta points lying in regions
/// seen by at least two frames (a frame sees a point when one of its
/// keypoints is within `radius`).
double overlap_spacing_variance(const MetaShape& meta, double radius);

}  // namespace imreg
