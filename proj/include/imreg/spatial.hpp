#pragma once

#include "imreg/core.hpp"

#include <cstdint>
#include <limits>
#include <vector>

namespace imreg {

struct Neighbor {
  Eigen::Index index = -1;
  double squared_distance = std::numeric_limits<double>::infinity();
};

/// Exact nearest-neighbour index over a fixed 3D point set. Equidistant
/// candidates resolve to the lowest point index, so queries are deterministic.
class KdTree {
 public:
  explicit KdTree(Points points);

  /// `skip` excludes one point index (e.g. the query point itself).
  Neighbor nearest(const Vec3& query, Eigen::Index skip = -1) const;
  Eigen::Index size() const { return points_.cols(); }
  const Points& points() const { return points_; }

 private:
  struct Node {
    Eigen::Index point;    // index into points_
    std::int32_t left = -1;
    std::int32_t right = -1;
    std::uint8_t axis = 0;
  };

  std::int32_t build(std::vector<Eigen::Index>& idx, std::size_t lo, std::size_t hi, int depth);
  void search(std::int32_t node, const Vec3& q, Eigen::Index skip, Neighbor& best) const;

  Points points_;
  std::vector<Node> nodes_;
  std::int32_t root_ = -1;
};

/// For every column of `queries`, its nearest neighbour in `tree`.
std::vector<Neighbor> nearest_all(const KdTree& tree, const Points& queries);

struct IndexPair {
  Eigen::Index first;
  Eigen::Index second;
  double distance;
};

/// Mutual spatial nearest neighbours between `a` and `b` with distance
/// strictly below `max_distance`, ordered by index into `a`.
std::vector<IndexPair> mutual_nearest(const Points& a, const Points& b, double max_distance);

}  // namespace imreg
