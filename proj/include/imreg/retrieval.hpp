#pragma once

#include "imreg/core.hpp"

#include <vector>

namespace imreg {

/// Unit-norm per-frame global feature.
using GlobalFeature = Eigen::VectorXd;

/// Generalized-mean pooling with signed powers: each coordinate becomes
/// sign(m)|m|^(1/p) with m the mean of sign(x)|x|^p, then the vector is
/// L2-normalized. p = 1 reduces to the normalized arithmetic mean.
GlobalFeature pool_global(const Descriptors& descriptors, double p = 3.0);

/// Neighbour fusion of global features. For every frame the `m` nearest
/// other features (L2, lowest index on ties) are blended in with weight
/// max(dot, 0); all inputs are read from the unfused set and every output is
/// re-normalized. m is clamped to N - 1.
std::vector<GlobalFeature> fuse_features(const std::vector<GlobalFeature>& features, int m);

struct SimilarityState {
  Eigen::MatrixXd matrix;      // s_ij = (2 - |g_i - g_j|) / 2
  Eigen::VectorXd meta_row;    // similarity of each frame to the meta-shape
  std::vector<bool> merged;

  Eigen::Index size() const { return matrix.rows(); }
  bool all_merged() const;
};

SimilarityState build_similarity(const std::vector<GlobalFeature>& features);

/// argmax of row sums, lowest index on ties.
FrameId select_seed(const SimilarityState& sim);

/// Up to k unmerged indices ordered by meta_row descending, lowest index on
/// ties. `excluded` (optional, length N) removes further indices.
std::vector<FrameId> top_k_candidates(const SimilarityState& sim, int k,
                                      const std::vector<bool>& excluded = {});

/// meta_row <- max(meta_row, row(selected)), then zero every merged entry.
/// Throws InvalidArgument when `selected` is already merged.
SimilarityState update_meta_row(SimilarityState sim, FrameId selected);

}  // namespace imreg
