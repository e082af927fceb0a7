#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <map>
#include <optional>
#include <vector>

namespace imreg {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Vec9 = Eigen::Matrix<double, 9, 1>;
using Points = Eigen::Matrix3Xd;      // one point per column
using Descriptors = Eigen::MatrixXd;  // one descriptor per column

using FrameId = int;

/// Column-stacking vectorization of a 3x3 matrix.
Vec9 vec(const Mat3& m);
Mat3 vec_inv(const Vec9& v);

/// Nearest rotation in Frobenius norm (U diag(1,1,det(UV^T)) V^T).
/// Throws DegenerateError when m has rank < 2 or non-finite entries.
Mat3 project_so3(const Mat3& m);

/// Rigid transform p -> R p + t. The rotation is re-projected onto SO(3)
/// whenever a Pose is built, so long composition chains stay orthonormal.
class Pose {
 public:
  Pose();
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return {}; }
  /// Takes the top 3x4 block of a homogeneous matrix.
  static Pose from_matrix(const Mat4& m);

  const Mat3& rotation() const { return rotation_; }
  const Vec3& translation() const { return translation_; }

  Vec3 apply(const Vec3& p) const { return rotation_ * p + translation_; }
  Points apply(const Points& pts) const;
  Mat4 matrix() const;

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

/// (a o b)(p) = a(b(p)).
Pose compose(const Pose& a, const Pose& b);
Pose invert(const Pose& t);

/// One scan: keypoints with unit-norm local descriptors.
class Frame {
 public:
  Frame(FrameId id, Points keypoints, Descriptors descriptors,
        std::optional<Pose> gt_pose = std::nullopt,
        std::optional<Eigen::VectorXd> global_feature = std::nullopt);

  FrameId id() const { return id_; }
  const Points& keypoints() const { return keypoints_; }
  const Descriptors& descriptors() const { return descriptors_; }
  const std::optional<Pose>& gt_pose() const { return gt_pose_; }
  /// Externally computed global feature; bypasses pooling when present.
  const std::optional<Eigen::VectorXd>& global_feature() const { return global_feature_; }

  Eigen::Index size() const { return keypoints_.cols(); }
  Eigen::Index dim() const { return descriptors_.rows(); }

 private:
  FrameId id_;
  Points keypoints_;
  Descriptors descriptors_;
  std::optional<Pose> gt_pose_;
  std::optional<Eigen::VectorXd> global_feature_;
};

struct MetaPoint {
  Vec3 position;
  Eigen::VectorXd descriptor;
  int coverage = 1;  // number of frames that have observed this point
  FrameId origin_frame = 0;
};

/// The growing registered model. Retrieval and matching see the sampled
/// `points`; refinement uses the untouched per-frame clouds.
struct MetaShape {
  std::vector<MetaPoint> points;
  std::map<FrameId, Pose> frame_poses;   // frame-local -> meta coordinates
  std::vector<FrameId> merged_ids;       // in merge order
  std::map<FrameId, Points> frame_clouds;  // original keypoints, meta coordinates

  /// Meta-shape made of the seed frame alone, with identity pose.
  static MetaShape from_seed(const Frame& seed);

  bool contains(FrameId id) const { return frame_poses.count(id) != 0; }
  Eigen::Index size() const { return static_cast<Eigen::Index>(points.size()); }

  Points positions() const;
  Descriptors descriptors() const;

  /// Throws InvalidArgument when the bookkeeping invariants are broken.
  void validate() const;
};

}  // namespace imreg
