#pragma once

#include "imreg/core.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace imreg {

struct Correspondence {
  Eigen::Index source_index;
  Eigen::Index target_index;
  Vec3 source;
  Vec3 target;
  double descriptor_distance;
};

/// A one-to-one matching between two keypoint sets, ordered by source index.
using CorrespondenceSet = std::vector<Correspondence>;

struct RansacConfig {
  int iterations = 5000;
  int sample_size = 3;
  double inlier_threshold = 0.07;  // tau
  int min_inliers = 15;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PairwiseEstimate {
  FrameId candidate = -1;
  std::optional<Pose> transform;  // candidate -> reference; absent on failure
  int inlier_count = 0;
  std::vector<bool> inlier_mask;
  int correspondence_count = 0;
  bool degenerate = false;  // no non-degenerate minimal sample was found

  bool ok() const { return transform.has_value(); }
};

/// Mutual nearest neighbours in descriptor space. When more than `cap` pairs
/// survive, the `cap` smallest descriptor distances are kept.
CorrespondenceSet match_descriptors(const Points& source_points, const Descriptors& source_desc,
                                    const Points& target_points, const Descriptors& target_desc,
                                    int cap);
CorrespondenceSet match_descriptors(const Frame& source, const Frame& target, int cap);
CorrespondenceSet match_descriptors(const Frame& source, const MetaShape& target, int cap);

/// Number of pairs with |t(p) - q| < tau.
int inlier_count(const CorrespondenceSet& c, const Pose& t, double tau);

/// Height of the triangle over its longest side, divided by that side.
/// Zero for collinear or coincident points.
double collinearity_ratio(const Vec3& a, const Vec3& b, const Vec3& c);
inline constexpr double kCollinearityThreshold = 1e-6;

/// Seeded 3-point hypothesize-and-verify, refit on the best inlier set.
PairwiseEstimate ransac_estimate(const CorrespondenceSet& c, const RansacConfig& cfg);

struct RerankResult {
  std::optional<std::size_t> best;         // index into `estimates`
  std::vector<PairwiseEstimate> estimates;  // one per candidate, input order

  const PairwiseEstimate* winner() const { return best ? &estimates[*best] : nullptr; }
};

/// Matches every candidate against the meta-shape, runs RANSAC seeded with
/// cfg.seed ^ candidate id and keeps the highest inlier count (lowest id on
/// ties). Candidates are evaluated on up to `threads` workers.
RerankResult rerank_candidates(const MetaShape& meta, std::span<const Frame* const> candidates,
                               const RansacConfig& cfg, int correspondence_cap = 5000,
                               int threads = 1);

}  // namespace imreg
