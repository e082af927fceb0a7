#pragma once

#include "imreg/core.hpp"

#include <optional>
#include <span>
#include <vector>

namespace imreg {

struct ObservedTransform {
  FrameId frame = -1;  // merged frame the observation was computed against
  Mat3 rotation;
  Vec3 translation;
  double weight;  // overlap ratio in (0, 1]
};

struct RefinementConfig {
  double overlap_threshold = 0.30;
  double tau = 0.07;
  int max_iterations = 10;
  double convergence = 1e-3;

  void validate() const;
};

/// Fraction of points in both clouds with a cross-cloud neighbour closer than
/// tau once `t` maps `p_i` onto `p_j`.
double overlap_ratio(const Points& p_i, const Points& p_j, const Pose& t, double tau);

/// Weighted least-squares rigid transform taking `source` onto `target`
/// (column-paired). Throws DegenerateError for fewer than 3 pairs or a
/// cross-covariance of rank < 2.
Pose procrustes(const Points& source, const Points& target,
                std::span<const double> weights = {});

/// Weighted single rotation averaging in vectorized matrix space
/// (Weiszfeld iteration started at `initial`), projected back onto SO(3).
Mat3 rotation_average(const Mat3& initial, std::span<const ObservedTransform> observed,
                      const RefinementConfig& cfg = {});

/// Closed-form weighted translation given the averaged rotation:
/// (A^T W A)^{-1} A^T W B with A_i = R_i R^T, B_i = t_i, W_i = w_i I.
Vec3 translation_average(const Mat3& averaged_rotation, std::span<const ObservedTransform> observed);

struct RefinementResult {
  Pose pose;
  std::vector<ObservedTransform> observations;
  std::vector<std::pair<FrameId, double>> overlaps;  // every merged frame, merge order
};

/// Refines the RANSAC transform of `frame` against the merged frames whose
/// overlap exceeds the threshold. Falls back to `ransac` without observations.
RefinementResult refine_transform(const MetaShape& meta, const Frame& frame, const Pose& ransac,
                                  const RefinementConfig& cfg = {}, int threads = 1);

}  // namespace imreg
