#include "imreg/retrieval.hpp"

#include "imreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace imreg {

namespace {

double signed_pow(double x, double p) {
  return x < 0.0 ? -std::pow(-x, p) : std::pow(x, p);
}

}  // namespace

GlobalFeature pool_global(const Descriptors& descriptors, double p) {
  if (descriptors.cols() == 0) throw InvalidArgument("pool_global: empty descriptor set");
  if (!(p > 0.0)) throw InvalidArgument("pool_global: exponent must be positive");
  GlobalFeature g(descriptors.rows());
  const double n = static_cast<double>(descriptors.cols());
  for (Eigen::Index r = 0; r < descriptors.rows(); ++r) {
    double acc = 0.0;
    for (Eigen::Index c = 0; c < descriptors.cols(); ++c) acc += signed_pow(descriptors(r, c), p);
    g(r) = signed_pow(acc / n, 1.0 / p);
  }
  const double norm = g.norm();
  if (!(norm > 0.0)) throw DegenerateError("pool_global: pooled feature vanished");
  return g / norm;
}

std::vector<GlobalFeature> fuse_features(const std::vector<GlobalFeature>& features, int m) {
  const auto n = static_cast<int>(features.size());
  if (m < 0) throw InvalidArgument("fuse_features: negative neighbour count");
  m = std::min(m, std::max(0, n - 1));
  std::vector<GlobalFeature> out;
  out.reserve(features.size());
  std::vector<int> order(static_cast<std::size_t>(n));
  std::vector<double> dist(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const GlobalFeature& gi = features[static_cast<std::size_t>(i)];
    for (int j = 0; j < n; ++j) dist[static_cast<std::size_t>(j)] = (features[static_cast<std::size_t>(j)] - gi).norm();
    order.resize(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    order.erase(order.begin() + i);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
      return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
    });
    GlobalFeature num = gi;
    double den = 1.0;
    for (int r = 0; r < m; ++r) {
      const GlobalFeature& gj = features[static_cast<std::size_t>(order[static_cast<std::size_t>(r)])];
      const double w = std::max(gj.dot(gi), 0.0);
      num += w * gj;
      den += w;
    }
    num /= den;
    out.push_back(num / num.norm());
  }
  return out;
}

bool SimilarityState::all_merged() const {
  return std::all_of(merged.begin(), merged.end(), [](bool b) { return b; });
}

SimilarityState build_similarity(const std::vector<GlobalFeature>& features) {
  const auto n = static_cast<Eigen::Index>(features.size());
  SimilarityState sim;
  sim.matrix = Eigen::MatrixXd::Identity(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i + 1; j < n; ++j) {
      const double d = (features[static_cast<std::size_t>(i)] - features[static_cast<std::size_t>(j)]).norm();
      const double s = std::clamp((2.0 - d) / 2.0, 0.0, 1.0);
      sim.matrix(i, j) = s;
      sim.matrix(j, i) = s;
    }
  }
  sim.meta_row = Eigen::VectorXd::Zero(n);
  sim.merged.assign(static_cast<std::size_t>(n), false);
  return sim;
}

FrameId select_seed(const SimilarityState& sim) {
  if (sim.size() < 1) throw InvalidArgument("select_seed: empty similarity matrix");
  Eigen::Index best = 0;
  double best_sum = sim.matrix.row(0).sum();
  for (Eigen::Index i = 1; i < sim.size(); ++i) {
    const double s = sim.matrix.row(i).sum();
    if (s > best_sum) {
      best = i;
      best_sum = s;
    }
  }
  return static_cast<FrameId>(best);
}

std::vector<FrameId> top_k_candidates(const SimilarityState& sim, int k,
                                      const std::vector<bool>& excluded) {
  std::vector<FrameId> ids;
  for (Eigen::Index i = 0; i < sim.size(); ++i) {
    const auto u = static_cast<std::size_t>(i);
    if (sim.merged[u] || (!excluded.empty() && excluded[u])) continue;
    ids.push_back(static_cast<FrameId>(i));
  }
  std::stable_sort(ids.begin(), ids.end(),
                   [&](FrameId a, FrameId b) { return sim.meta_row(a) > sim.meta_row(b); });
  if (k >= 0 && ids.size() > static_cast<std::size_t>(k)) ids.resize(static_cast<std::size_t>(k));
  return ids;
}

SimilarityState update_meta_row(SimilarityState sim, FrameId selected) {
  if (selected < 0 || selected >= sim.size())
    throw InvalidArgument("update_meta_row: frame " + std::to_string(selected) + " out of range");
  if (sim.merged[static_cast<std::size_t>(selected)])
    throw InvalidArgument("update_meta_row: frame " + std::to_string(selected) + " already merged");
  sim.meta_row = sim.meta_row.cwiseMax(sim.matrix.row(selected).transpose());
  sim.merged[static_cast<std::size_t>(selected)] = true;
  for (Eigen::Index i = 0; i < sim.size(); ++i)
    if (sim.merged[static_cast<std::size_t>(i)]) sim.meta_row(i) = 0.0;
  return sim;
}

}  // namespace imreg
