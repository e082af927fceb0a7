#include "imreg/refinement.hpp"

#include "imreg/error.hpp"
#include "imreg/parallel.hpp"
#include "imreg/spatial.hpp"

#include <Eigen/Dense>

#include <cmath>

namespace imreg {

void RefinementConfig::validate() const {
  if (!(overlap_threshold > 0.0)) throw InvalidArgument("refinement: overlap threshold must be > 0");
  if (!(tau > 0.0)) throw InvalidArgument("refinement: tau must be > 0");
  if (max_iterations < 1) throw InvalidArgument("refinement: max iterations must be >= 1");
  if (!(convergence > 0.0)) throw InvalidArgument("refinement: convergence must be > 0");
}

double overlap_ratio(const Points& p_i, const Points& p_j, const Pose& t, double tau) {
  if (p_i.cols() == 0 || p_j.cols() == 0) throw InvalidArgument("overlap_ratio: empty point set");
  if (!(tau > 0.0)) throw InvalidArgument("overlap_ratio: tau must be > 0");
  const Points moved = t.apply(p_i);
  const KdTree tree_j(p_j), tree_i(moved);
  const double tau2 = tau * tau;
  long hits = 0;
  for (Eigen::Index k = 0; k < moved.cols(); ++k)
    if (tree_j.nearest(moved.col(k)).squared_distance < tau2) ++hits;
  for (Eigen::Index k = 0; k < p_j.cols(); ++k)
    if (tree_i.nearest(p_j.col(k)).squared_distance < tau2) ++hits;
  return static_cast<double>(hits) / static_cast<double>(p_i.cols() + p_j.cols());
}

Pose procrustes(const Points& source, const Points& target, std::span<const double> weights) {
  const Eigen::Index n = source.cols();
  if (target.cols() != n) throw InvalidArgument("procrustes: point counts differ");
  if (!weights.empty() && static_cast<Eigen::Index>(weights.size()) != n)
    throw InvalidArgument("procrustes: weight count differs from pair count");
  if (n < 3) throw DegenerateError("procrustes: fewer than 3 pairs");

  Eigen::VectorXd w = Eigen::VectorXd::Ones(n);
  if (!weights.empty()) w = Eigen::Map<const Eigen::VectorXd>(weights.data(), n);
  if ((w.array() < 0.0).any() || !(w.sum() > 0.0))
    throw InvalidArgument("procrustes: weights must be nonnegative with positive sum");

  const double total = w.sum();
  const Vec3 cs = source * w / total;
  const Vec3 ct = target * w / total;
  const Points src = source.colwise() - cs;
  const Points dst = target.colwise() - ct;
  const Mat3 h = src * w.asDiagonal() * dst.transpose();

  Eigen::JacobiSVD<Mat3> svd(h, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0))
    throw DegenerateError("procrustes: collinear or coincident correspondences");
  Mat3 d = Mat3::Identity();
  d(2, 2) = (svd.matrixV() * svd.matrixU().transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  const Mat3 r = svd.matrixV() * d * svd.matrixU().transpose();
  return Pose(r, ct - r * cs);
}

Mat3 rotation_average(const Mat3& initial, std::span<const ObservedTransform> observed,
                      const RefinementConfig& cfg) {
  if (observed.empty()) throw InvalidArgument("rotation_average: no observations");
  std::vector<Vec9> targets;
  targets.reserve(observed.size());
  for (const ObservedTransform& o : observed) {
    if (!(o.weight > 0.0)) throw InvalidArgument("rotation_average: weights must be positive");
    targets.push_back(vec(o.rotation));
  }

  Vec9 s = vec(initial);
  for (int it = 0; it < cfg.max_iterations; ++it) {
    Vec9 num = Vec9::Zero();
    double den = 0.0;
    for (std::size_t i = 0; i < targets.size(); ++i) {
      const Vec9 v = targets[i] - s;
      const double d = v.norm();
      if (d < 1e-12) return project_so3(observed[i].rotation);
      num += observed[i].weight * v / d;
      den += observed[i].weight / d;
    }
    const Vec9 previous = s;
    // Weiszfeld step taken from the current estimate
    s = previous + num / den;
    if ((s - previous).norm() < cfg.convergence) break;
  }
  return project_so3(vec_inv(s));
}

Vec3 translation_average(const Mat3& averaged_rotation, std::span<const ObservedTransform> observed) {
  if (observed.empty()) throw InvalidArgument("translation_average: no observations");
  const auto m = static_cast<Eigen::Index>(observed.size());
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(3 * m, 3);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(3 * m);
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(3 * m, 3 * m);
  for (Eigen::Index i = 0; i < m; ++i) {
    const ObservedTransform& o = observed[static_cast<std::size_t>(i)];
    a.block<3, 3>(3 * i, 0) = o.rotation * averaged_rotation.transpose();
    b.segment<3>(3 * i) = o.translation;
    w.block<3, 3>(3 * i, 3 * i) = o.weight * Mat3::Identity();
  }
  const Mat3 normal = a.transpose() * w * a;
  const Vec3 rhs = a.transpose() * w * b;
  Eigen::FullPivLU<Mat3> lu(normal);
  if (!lu.isInvertible())
    throw DegenerateError("translation_average: singular normal equations");
  return lu.solve(rhs);
}

RefinementResult refine_transform(const MetaShape& meta, const Frame& frame, const Pose& ransac,
                                  const RefinementConfig& cfg, int threads) {
  cfg.validate();
  const auto& ids = meta.merged_ids;
  const Points moved = ransac.apply(frame.keypoints());

  struct Slot {
    double overlap = 0.0;
    std::optional<ObservedTransform> obs;
  };
  std::vector<Slot> slots(ids.size());
  parallel_for(ids.size(), threads, [&](std::size_t k) {
    const Points& cloud = meta.frame_clouds.at(ids[k]);
    Slot& slot = slots[k];
    slot.overlap = overlap_ratio(frame.keypoints(), cloud, ransac, cfg.tau);
    if (!(slot.overlap > cfg.overlap_threshold)) return;
    const auto pairs = mutual_nearest(moved, cloud, cfg.tau);
    if (pairs.size() < 3) return;
    Points src(3, static_cast<Eigen::Index>(pairs.size())), dst(3, static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t p = 0; p < pairs.size(); ++p) {
      src.col(static_cast<Eigen::Index>(p)) = frame.keypoints().col(pairs[p].first);
      dst.col(static_cast<Eigen::Index>(p)) = cloud.col(pairs[p].second);
    }
    try {
      const Pose fit = procrustes(src, dst);
      slot.obs = ObservedTransform{ids[k], fit.rotation(), fit.translation(), slot.overlap};
    } catch (const DegenerateError&) {
    }
  });

  RefinementResult result{ransac, {}, {}};
  for (std::size_t k = 0; k < ids.size(); ++k) {
    result.overlaps.emplace_back(ids[k], slots[k].overlap);
    if (slots[k].obs) result.observations.push_back(*slots[k].obs);
  }
  if (result.observations.size() == 1) {
    const ObservedTransform& o = result.observations.front();
    result.pose = Pose(o.rotation, o.translation);
  } else if (result.observations.size() >= 2) {
    const Mat3 r = rotation_average(ransac.rotation(), result.observations, cfg);
    result.pose = Pose(r, translation_average(r, result.observations));
  }
  return result;
}

}  // namespace imreg
