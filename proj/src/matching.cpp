#include "imreg/matching.hpp"

#include "imreg/error.hpp"
#include "imreg/parallel.hpp"
#include "imreg/random.hpp"
#include "imreg/refinement.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

namespace imreg {

void RansacConfig::validate() const {
  if (iterations < 1) throw InvalidArgument("ransac: iterations must be >= 1");
  if (sample_size != 3) throw InvalidArgument("ransac: sample size must be 3");
  if (!(inlier_threshold > 0.0)) throw InvalidArgument("ransac: inlier threshold must be > 0");
  if (min_inliers < 0) throw InvalidArgument("ransac: negative min inliers");
}

CorrespondenceSet match_descriptors(const Points& source_points, const Descriptors& source_desc,
                                    const Points& target_points, const Descriptors& target_desc,
                                    int cap) {
  const Eigen::Index ns = source_desc.cols(), nt = target_desc.cols();
  if (ns == 0 || nt == 0) throw InvalidArgument("match_descriptors: empty descriptor set");
  if (source_desc.rows() != target_desc.rows())
    throw InvalidArgument("match_descriptors: descriptor dimensions differ");

  // squared distances up to the per-row/per-column constant terms
  const Eigen::VectorXd sn = source_desc.colwise().squaredNorm().transpose();
  const Eigen::VectorXd tn = target_desc.colwise().squaredNorm().transpose();
  Eigen::MatrixXd d2 = -2.0 * (source_desc.transpose() * target_desc);
  d2.colwise() += sn;
  d2.rowwise() += tn.transpose();

  std::vector<Eigen::Index> best_t(static_cast<std::size_t>(ns));
  std::vector<Eigen::Index> best_s(static_cast<std::size_t>(nt), 0);
  std::vector<double> best_s_val(static_cast<std::size_t>(nt), std::numeric_limits<double>::infinity());
  for (Eigen::Index i = 0; i < ns; ++i) {
    Eigen::Index arg = 0;
    double v = d2(i, 0);
    for (Eigen::Index j = 0; j < nt; ++j) {
      const double x = d2(i, j);
      if (x < v) {
        v = x;
        arg = j;
      }
      if (x < best_s_val[static_cast<std::size_t>(j)]) {
        best_s_val[static_cast<std::size_t>(j)] = x;
        best_s[static_cast<std::size_t>(j)] = i;
      }
    }
    best_t[static_cast<std::size_t>(i)] = arg;
  }

  CorrespondenceSet out;
  for (Eigen::Index i = 0; i < ns; ++i) {
    const Eigen::Index j = best_t[static_cast<std::size_t>(i)];
    if (best_s[static_cast<std::size_t>(j)] != i) continue;
    out.push_back({i, j, source_points.col(i), target_points.col(j),
                   (source_desc.col(i) - target_desc.col(j)).norm()});
  }
  if (cap >= 0 && out.size() > static_cast<std::size_t>(cap)) {
    std::stable_sort(out.begin(), out.end(), [](const Correspondence& a, const Correspondence& b) {
      return a.descriptor_distance < b.descriptor_distance;
    });
    out.resize(static_cast<std::size_t>(cap));
    std::sort(out.begin(), out.end(), [](const Correspondence& a, const Correspondence& b) {
      return a.source_index < b.source_index;
    });
  }
  return out;
}

CorrespondenceSet match_descriptors(const Frame& source, const Frame& target, int cap) {
  return match_descriptors(source.keypoints(), source.descriptors(), target.keypoints(),
                           target.descriptors(), cap);
}

CorrespondenceSet match_descriptors(const Frame& source, const MetaShape& target, int cap) {
  if (target.points.empty()) throw InvalidArgument("match_descriptors: empty meta-shape");
  return match_descriptors(source.keypoints(), source.descriptors(), target.positions(),
                           target.descriptors(), cap);
}

int inlier_count(const CorrespondenceSet& c, const Pose& t, double tau) {
  if (!(tau > 0.0)) throw InvalidArgument("inlier_count: tau must be > 0");
  int ic = 0;
  for (const Correspondence& p : c)
    if ((t.apply(p.source) - p.target).norm() < tau) ++ic;
  return ic;
}

double collinearity_ratio(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double longest = std::max({(b - a).norm(), (c - a).norm(), (c - b).norm()});
  if (!(longest > 0.0)) return 0.0;
  const double twice_area = (b - a).cross(c - a).norm();
  return twice_area / (longest * longest);
}

namespace {

struct Score {
  int inliers = -1;
  double mean_residual = std::numeric_limits<double>::infinity();

  bool better_than(const Score& o) const {
    return inliers > o.inliers || (inliers == o.inliers && mean_residual < o.mean_residual);
  }
};

Score score(const CorrespondenceSet& c, const Pose& t, double tau) {
  Score s{0, 0.0};
  for (const Correspondence& p : c) {
    const double r = (t.apply(p.source) - p.target).norm();
    if (r < tau) {
      ++s.inliers;
      s.mean_residual += r;
    }
  }
  s.mean_residual = s.inliers > 0 ? s.mean_residual / s.inliers : std::numeric_limits<double>::infinity();
  return s;
}

std::optional<Pose> fit(const CorrespondenceSet& c, std::span<const std::size_t> idx) {
  Points src(3, static_cast<Eigen::Index>(idx.size())), dst(3, static_cast<Eigen::Index>(idx.size()));
  for (std::size_t k = 0; k < idx.size(); ++k) {
    src.col(static_cast<Eigen::Index>(k)) = c[idx[k]].source;
    dst.col(static_cast<Eigen::Index>(k)) = c[idx[k]].target;
  }
  try {
    return procrustes(src, dst);
  } catch (const DegenerateError&) {
    return std::nullopt;
  }
}

}  // namespace

PairwiseEstimate ransac_estimate(const CorrespondenceSet& c, const RansacConfig& cfg) {
  cfg.validate();
  PairwiseEstimate est;
  est.correspondence_count = static_cast<int>(c.size());
  est.inlier_mask.assign(c.size(), false);
  if (c.size() < 3) {
    est.degenerate = true;
    return est;
  }

  Rng rng(cfg.seed);
  const std::uint64_t n = c.size();
  std::optional<Pose> best_pose;
  Score best;
  std::array<std::size_t, 3> sample{};
  for (int it = 0; it < cfg.iterations; ++it) {
    sample[0] = rng.index(n);
    do sample[1] = rng.index(n); while (sample[1] == sample[0]);
    do sample[2] = rng.index(n); while (sample[2] == sample[0] || sample[2] == sample[1]);
    if (collinearity_ratio(c[sample[0]].source, c[sample[1]].source, c[sample[2]].source) <
        kCollinearityThreshold)
      continue;
    const auto pose = fit(c, sample);
    if (!pose) continue;
    const Score s = score(c, *pose, cfg.inlier_threshold);
    if (s.better_than(best)) {
      best = s;
      best_pose = pose;
    }
  }
  if (!best_pose) {
    est.degenerate = true;
    return est;
  }

  std::vector<std::size_t> inliers;
  for (std::size_t i = 0; i < c.size(); ++i)
    if ((best_pose->apply(c[i].source) - c[i].target).norm() < cfg.inlier_threshold) inliers.push_back(i);
  if (inliers.size() >= 3) {
    if (const auto refit = fit(c, inliers)) {
      if (score(c, *refit, cfg.inlier_threshold).inliers >= best.inliers) best_pose = refit;
    }
  }

  for (std::size_t i = 0; i < c.size(); ++i)
    est.inlier_mask[i] = (best_pose->apply(c[i].source) - c[i].target).norm() < cfg.inlier_threshold;
  est.inlier_count = static_cast<int>(std::count(est.inlier_mask.begin(), est.inlier_mask.end(), true));
  if (est.inlier_count >= cfg.min_inliers) est.transform = best_pose;
  return est;
}

RerankResult rerank_candidates(const MetaShape& meta, std::span<const Frame* const> candidates,
                               const RansacConfig& cfg, int correspondence_cap, int threads) {
  if (candidates.empty()) throw InvalidArgument("rerank_candidates: no candidates");
  const Points meta_points = meta.positions();
  const Descriptors meta_desc = meta.descriptors();
  RerankResult result;
  result.estimates.resize(candidates.size());
  parallel_for(candidates.size(), threads, [&](std::size_t k) {
    const Frame& frame = *candidates[k];
    RansacConfig local = cfg;
    local.seed = cfg.seed ^ static_cast<std::uint64_t>(frame.id());
    const auto corr = match_descriptors(frame.keypoints(), frame.descriptors(), meta_points,
                                        meta_desc, correspondence_cap);
    PairwiseEstimate est = ransac_estimate(corr, local);
    est.candidate = frame.id();
    result.estimates[k] = std::move(est);
  });
  for (std::size_t k = 0; k < result.estimates.size(); ++k) {
    const PairwiseEstimate& e = result.estimates[k];
    if (!e.ok()) continue;
    if (!result.best) {
      result.best = k;
      continue;
    }
    const PairwiseEstimate& b = result.estimates[*result.best];
    if (e.inlier_count > b.inlier_count || (e.inlier_count == b.inlier_count && e.candidate < b.candidate))
      result.best = k;
  }
  return result;
}

}  // namespace imreg
