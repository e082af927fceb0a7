#include "imreg/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace imreg {

KdTree::KdTree(Points points) : points_(std::move(points)) {
  if (points_.cols() == 0) return;
  std::vector<Eigen::Index> idx(static_cast<std::size_t>(points_.cols()));
  std::iota(idx.begin(), idx.end(), Eigen::Index{0});
  nodes_.reserve(idx.size());
  root_ = build(idx, 0, idx.size(), 0);
}

std::int32_t KdTree::build(std::vector<Eigen::Index>& idx, std::size_t lo, std::size_t hi,
                           int depth) {
  if (lo >= hi) return -1;
  const int axis = depth % 3;
  const std::size_t mid = lo + (hi - lo) / 2;
  std::nth_element(idx.begin() + static_cast<std::ptrdiff_t>(lo),
                   idx.begin() + static_cast<std::ptrdiff_t>(mid),
                   idx.begin() + static_cast<std::ptrdiff_t>(hi),
                   [&](Eigen::Index a, Eigen::Index b) {
                     const double va = points_(axis, a), vb = points_(axis, b);
                     return va < vb || (va == vb && a < b);
                   });
  const auto self = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back({idx[mid], -1, -1, static_cast<std::uint8_t>(axis)});
  const std::int32_t left = build(idx, lo, mid, depth + 1);
  const std::int32_t right = build(idx, mid + 1, hi, depth + 1);
  nodes_[static_cast<std::size_t>(self)].left = left;
  nodes_[static_cast<std::size_t>(self)].right = right;
  return self;
}

void KdTree::search(std::int32_t node, const Vec3& q, Eigen::Index skip, Neighbor& best) const {
  if (node < 0) return;
  const Node& n = nodes_[static_cast<std::size_t>(node)];
  const double d2 = (points_.col(n.point) - q).squaredNorm();
  if (n.point != skip &&
      (d2 < best.squared_distance || (d2 == best.squared_distance && n.point < best.index)))
    best = {n.point, d2};
  const double delta = q(n.axis) - points_(n.axis, n.point);
  const std::int32_t near = delta <= 0.0 ? n.left : n.right;
  const std::int32_t far = delta <= 0.0 ? n.right : n.left;
  search(near, q, skip, best);
  // <= keeps equidistant lower-index points reachable across the split plane
  if (delta * delta <= best.squared_distance) search(far, q, skip, best);
}

Neighbor KdTree::nearest(const Vec3& query, Eigen::Index skip) const {
  Neighbor best;
  search(root_, query, skip, best);
  return best;
}

std::vector<Neighbor> nearest_all(const KdTree& tree, const Points& queries) {
  std::vector<Neighbor> out(static_cast<std::size_t>(queries.cols()));
  for (Eigen::Index i = 0; i < queries.cols(); ++i)
    out[static_cast<std::size_t>(i)] = tree.nearest(queries.col(i));
  return out;
}

std::vector<IndexPair> mutual_nearest(const Points& a, const Points& b, double max_distance) {
  std::vector<IndexPair> pairs;
  if (a.cols() == 0 || b.cols() == 0) return pairs;
  const KdTree tree_a(a), tree_b(b);
  const auto a_to_b = nearest_all(tree_b, a);
  const auto b_to_a = nearest_all(tree_a, b);
  for (Eigen::Index i = 0; i < a.cols(); ++i) {
    const Neighbor& nb = a_to_b[static_cast<std::size_t>(i)];
    if (b_to_a[static_cast<std::size_t>(nb.index)].index != i) continue;
    const double d = std::sqrt(nb.squared_distance);
    if (d < max_distance) pairs.push_back({i, nb.index, d});
  }
  return pairs;
}

}  // namespace imreg
