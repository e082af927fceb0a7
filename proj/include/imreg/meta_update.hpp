#pragma once

#include "imreg/core.hpp"

#include <cstdint>
#include <optional>
#include <string_view>
#include <vector>

namespace imreg {

struct RedundantPair {
  Eigen::Index meta_index;
  Eigen::Index frame_index;
  double distance;  // < tau
};

enum class MergeMode { reservoir, concat, mean };

std::string_view to_string(MergeMode mode);
/// Throws InvalidArgument on unknown names.
MergeMode parse_merge_mode(std::string_view name);

/// Mutual spatial nearest neighbours between the meta points and the frame
/// keypoints mapped by `pose`, closer than tau. Ordered by meta index.
std::vector<RedundantPair> find_redundant_pairs(const MetaShape& meta, const Frame& frame,
                                                const Pose& pose, double tau);

/// Probability that the incoming point replaces a meta point already covered
/// by `coverage` frames: 1 / (coverage + 1).
double keep_new_probability(int coverage);

/// Reservoir-sampling merge. Each redundant pair keeps the incoming point with
/// probability 1/(c+1), drawn in ascending meta-index order; the survivor's
/// coverage becomes c+1 either way. Unpaired frame points are appended.
MetaShape reservoir_merge(MetaShape meta, const Frame& frame, const Pose& pose, double tau,
                          std::uint64_t seed);

/// Ablation merges: `concat` appends every transformed point; `mean` replaces
/// each redundant pair by the coverage-weighted running mean.
MetaShape alt_merge(MetaShape meta, const Frame& frame, const Pose& pose, double tau, MergeMode mode);

/// Dispatches on `mode`; `seed` is used by the reservoir merge only.
MetaShape merge_frame(MetaShape meta, const Frame& frame, const Pose& pose, double tau,
                      MergeMode mode, std::uint64_t seed);

}  // namespace imreg
