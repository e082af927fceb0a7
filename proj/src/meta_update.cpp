#include "imreg/meta_update.hpp"

#include "imreg/error.hpp"
#include "imreg/random.hpp"
#include "imreg/spatial.hpp"

#include <string>

namespace imreg {

std::string_view to_string(MergeMode mode) {
  switch (mode) {
    case MergeMode::reservoir: return "reservoir";
    case MergeMode::concat: return "concat";
    case MergeMode::mean: return "mean";
  }
  return "unknown";
}

MergeMode parse_merge_mode(std::string_view name) {
  if (name == "reservoir") return MergeMode::reservoir;
  if (name == "concat") return MergeMode::concat;
  if (name == "mean") return MergeMode::mean;
  throw InvalidArgument("unknown merge mode '" + std::string(name) + "'");
}

std::vector<RedundantPair> find_redundant_pairs(const MetaShape& meta, const Frame& frame,
                                                const Pose& pose, double tau) {
  std::vector<RedundantPair> out;
  if (meta.points.empty()) return out;
  for (const IndexPair& p : mutual_nearest(meta.positions(), pose.apply(frame.keypoints()), tau))
    out.push_back({p.first, p.second, p.distance});
  return out;
}

double keep_new_probability(int coverage) {
  if (coverage < 1) throw InvalidArgument("keep_new_probability: coverage must be >= 1");
  return 1.0 / (static_cast<double>(coverage) + 1.0);
}

namespace {

void check_unmerged(const MetaShape& meta, const Frame& frame) {
  if (meta.contains(frame.id()))
    throw InvalidArgument("merge: frame " + std::to_string(frame.id()) + " is already merged");
  if (!meta.points.empty() && meta.points.front().descriptor.size() != frame.dim())
    throw InvalidArgument("merge: descriptor dimension differs from the meta-shape");
}

void record_frame(MetaShape& meta, const Frame& frame, const Pose& pose, const Points& moved) {
  meta.frame_poses.emplace(frame.id(), pose);
  meta.merged_ids.push_back(frame.id());
  meta.frame_clouds.emplace(frame.id(), moved);
}

void append_unpaired(MetaShape& meta, const Frame& frame, const Points& moved,
                     const std::vector<bool>& paired) {
  for (Eigen::Index i = 0; i < frame.size(); ++i) {
    if (paired[static_cast<std::size_t>(i)]) continue;
    meta.points.push_back({moved.col(i), frame.descriptors().col(i), 1, frame.id()});
  }
}

}  // namespace

MetaShape reservoir_merge(MetaShape meta, const Frame& frame, const Pose& pose, double tau,
                          std::uint64_t seed) {
  check_unmerged(meta, frame);
  const Points moved = pose.apply(frame.keypoints());
  const auto pairs = find_redundant_pairs(meta, frame, pose, tau);
  std::vector<bool> paired(static_cast<std::size_t>(frame.size()), false);
  Rng rng(seed);
  for (const RedundantPair& p : pairs) {
    MetaPoint& mp = meta.points[static_cast<std::size_t>(p.meta_index)];
    if (rng.uniform01() < keep_new_probability(mp.coverage)) {
      mp.position = moved.col(p.frame_index);
      mp.descriptor = frame.descriptors().col(p.frame_index);
      mp.origin_frame = frame.id();
    }
    ++mp.coverage;
    paired[static_cast<std::size_t>(p.frame_index)] = true;
  }
  append_unpaired(meta, frame, moved, paired);
  record_frame(meta, frame, pose, moved);
  return meta;
}

MetaShape alt_merge(MetaShape meta, const Frame& frame, const Pose& pose, double tau, MergeMode mode) {
  check_unmerged(meta, frame);
  const Points moved = pose.apply(frame.keypoints());
  std::vector<bool> paired(static_cast<std::size_t>(frame.size()), false);
  switch (mode) {
    case MergeMode::concat:
      break;
    case MergeMode::mean:
      for (const RedundantPair& p : find_redundant_pairs(meta, frame, pose, tau)) {
        MetaPoint& mp = meta.points[static_cast<std::size_t>(p.meta_index)];
        const double c = mp.coverage;
        mp.position = (c * mp.position + moved.col(p.frame_index)) / (c + 1.0);
        Eigen::VectorXd d = c * mp.descriptor + frame.descriptors().col(p.frame_index);
        const double n = d.norm();
        // antipodal descriptors cancel; keep the existing one
        if (n > 0.0) mp.descriptor = d / n;
        ++mp.coverage;
        paired[static_cast<std::size_t>(p.frame_index)] = true;
      }
      break;
    case MergeMode::reservoir:
      throw InvalidArgument("alt_merge: use reservoir_merge for the reservoir mode");
  }
  append_unpaired(meta, frame, moved, paired);
  record_frame(meta, frame, pose, moved);
  return meta;
}

MetaShape merge_frame(MetaShape meta, const Frame& frame, const Pose& pose, double tau,
                      MergeMode mode, std::uint64_t seed) {
  if (mode == MergeMode::reservoir) return reservoir_merge(std::move(meta), frame, pose, tau, seed);
  return alt_merge(std::move(meta), frame, pose, tau, mode);
}

}  // namespace imreg
