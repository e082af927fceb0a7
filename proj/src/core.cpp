#include "imreg/core.hpp"

#include "imreg/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <string>

namespace imreg {

Vec9 vec(const Mat3& m) {
  Vec9 v;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) v(3 * c + r) = m(r, c);
  return v;
}

Mat3 vec_inv(const Vec9& v) {
  Mat3 m;
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < 3; ++r) m(r, c) = v(3 * c + r);
  return m;
}

Mat3 project_so3(const Mat3& m) {
  if (!m.allFinite()) throw DegenerateError("project_so3: non-finite matrix");
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3& s = svd.singularValues();
  if (!(s(0) > 0.0) || s(1) <= 1e-12 * s(0))
    throw DegenerateError("project_so3: matrix has rank < 2, rotation is undetermined");
  const Mat3& u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  Mat3 d = Mat3::Identity();
  d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return u * d * v.transpose();
}

Pose::Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(project_so3(rotation)), translation_(translation) {
  if (!translation_.allFinite()) throw InvalidArgument("Pose: non-finite translation");
}

Pose Pose::from_matrix(const Mat4& m) {
  return Pose(m.topLeftCorner<3, 3>(), m.topRightCorner<3, 1>());
}

Points Pose::apply(const Points& pts) const {
  Points out = rotation_ * pts;
  out.colwise() += translation_;
  return out;
}

Mat4 Pose::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = rotation_;
  m.topRightCorner<3, 1>() = translation_;
  return m;
}

Pose compose(const Pose& a, const Pose& b) {
  return Pose(a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation());
}

Pose invert(const Pose& t) {
  const Mat3 rt = t.rotation().transpose();
  return Pose(rt, -rt * t.translation());
}

Frame::Frame(FrameId id, Points keypoints, Descriptors descriptors, std::optional<Pose> gt_pose,
             std::optional<Eigen::VectorXd> global_feature)
    : id_(id),
      keypoints_(std::move(keypoints)),
      descriptors_(std::move(descriptors)),
      gt_pose_(std::move(gt_pose)),
      global_feature_(std::move(global_feature)) {
  const std::string tag = "frame " + std::to_string(id_) + ": ";
  if (keypoints_.cols() < 1) throw InvalidArgument(tag + "no keypoints");
  if (keypoints_.cols() != descriptors_.cols())
    throw InvalidArgument(tag + std::to_string(keypoints_.cols()) + " keypoints but " +
                          std::to_string(descriptors_.cols()) + " descriptors");
  if (descriptors_.rows() < 1) throw InvalidArgument(tag + "zero-dimensional descriptors");
  if (!keypoints_.allFinite()) throw InvalidArgument(tag + "non-finite keypoint");
  for (Eigen::Index i = 0; i < descriptors_.cols(); ++i) {
    const double n = descriptors_.col(i).norm();
    if (!(std::abs(n - 1.0) <= 1e-5))
      throw InvalidArgument(tag + "descriptor " + std::to_string(i) + " has norm " +
                            std::to_string(n));
  }
  if (global_feature_ && std::abs(global_feature_->norm() - 1.0) > 1e-5)
    throw InvalidArgument(tag + "global feature is not unit norm");
}

MetaShape MetaShape::from_seed(const Frame& seed) {
  MetaShape meta;
  meta.points.reserve(static_cast<std::size_t>(seed.size()));
  for (Eigen::Index i = 0; i < seed.size(); ++i)
    meta.points.push_back({seed.keypoints().col(i), seed.descriptors().col(i), 1, seed.id()});
  meta.frame_poses.emplace(seed.id(), Pose::identity());
  meta.merged_ids.push_back(seed.id());
  meta.frame_clouds.emplace(seed.id(), seed.keypoints());
  return meta;
}

Points MetaShape::positions() const {
  Points out(3, size());
  for (Eigen::Index i = 0; i < size(); ++i) out.col(i) = points[static_cast<std::size_t>(i)].position;
  return out;
}

Descriptors MetaShape::descriptors() const {
  if (points.empty()) return {};
  Descriptors out(points.front().descriptor.size(), size());
  for (Eigen::Index i = 0; i < size(); ++i)
    out.col(i) = points[static_cast<std::size_t>(i)].descriptor;
  return out;
}

void MetaShape::validate() const {
  if (frame_poses.size() != merged_ids.size() || frame_clouds.size() != merged_ids.size())
    throw InvalidArgument("meta-shape: pose/cloud bookkeeping does not match merged ids");
  for (FrameId id : merged_ids)
    if (!contains(id)) throw InvalidArgument("meta-shape: merged frame without pose");
  for (const MetaPoint& p : points) {
    if (p.coverage < 1) throw InvalidArgument("meta-shape: coverage below 1");
    if (!contains(p.origin_frame))
      throw InvalidArgument("meta-shape: point origin " + std::to_string(p.origin_frame) +
                            " is not a merged frame");
  }
}

}  // namespace imreg
