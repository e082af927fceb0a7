#include "imreg/error.hpp"
#include "imreg/spatial.hpp"
#include "imreg/synth_eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

namespace imreg {

double rotation_error(const Mat3& pred, const Mat3& gt) {
  const double c = std::clamp(((pred.transpose() * gt).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

double translation_error(const Vec3& pred, const Vec3& gt) { return (pred - gt).norm(); }

std::vector<double> ecdf(const std::vector<double>& errors, const std::vector<double>& thresholds) {
  if (!std::is_sorted(thresholds.begin(), thresholds.end()))
    throw InvalidArgument("ecdf: thresholds must be ascending");
  std::vector<double> out;
  out.reserve(thresholds.size());
  for (double t : thresholds) {
    if (errors.empty()) {
      out.push_back(0.0);
      continue;
    }
    const auto hits = std::count_if(errors.begin(), errors.end(), [t](double e) { return e <= t; });
    out.push_back(static_cast<double>(hits) / static_cast<double>(errors.size()));
  }
  return out;
}

double registration_recall(const std::vector<PairError>& pairs, double re_threshold, double te_threshold) {
  if (pairs.empty()) throw InvalidArgument("registration_recall: no pairs");
  const auto ok = std::count_if(pairs.begin(), pairs.end(), [&](const PairError& p) {
    return p.te < te_threshold && p.re < re_threshold;
  });
  return static_cast<double>(ok) / static_cast<double>(pairs.size());
}

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

ErrorReport evaluate_poses(const std::map<FrameId, Pose>& pred, const std::map<FrameId, Pose>& gt,
                           const std::optional<std::vector<OverlapEdge>>& graph, const EvalConfig& cfg) {
  std::vector<std::pair<FrameId, FrameId>> pairs;
  if (graph) {
    for (const OverlapEdge& e : *graph)
      if (e.overlap > cfg.min_overlap) pairs.emplace_back(std::min(e.a, e.b), std::max(e.a, e.b));
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
  } else {
    for (auto a = gt.begin(); a != gt.end(); ++a)
      for (auto b = std::next(a); b != gt.end(); ++b) pairs.emplace_back(a->first, b->first);
  }

  ErrorReport report;
  for (const auto& [a, b] : pairs) {
    if (!gt.count(a) || !gt.count(b))
      throw InvalidArgument("evaluate_poses: no ground truth for pair (" + std::to_string(a) + ", " +
                            std::to_string(b) + ")");
    if (!pred.count(a) || !pred.count(b)) {
      report.missing.emplace_back(a, b);
      continue;
    }
    const Pose rel_pred = compose(pred.at(a), invert(pred.at(b)));
    const Pose rel_gt = compose(gt.at(a), invert(gt.at(b)));
    report.pairs.push_back({a, b, rotation_error(rel_pred.rotation(), rel_gt.rotation()),
                            translation_error(rel_pred.translation(), rel_gt.translation())});
  }

  std::vector<double> re, te;
  for (const PairError& p : report.pairs) {
    re.push_back(p.re);
    te.push_back(p.te);
  }
  report.mean_re = mean(re);
  report.median_re = median(re);
  report.mean_te = mean(te);
  report.median_te = median(te);
  std::vector<double> re_thr;
  for (double d : cfg.re_thresholds_deg) re_thr.push_back(d * std::numbers::pi / 180.0);
  report.re_ecdf = ecdf(re, re_thr);
  report.te_ecdf = ecdf(te, cfg.te_thresholds);

  const double total = static_cast<double>(report.pairs.size() + report.missing.size());
  if (total > 0) {
    const double re_max = cfg.rr_rotation_deg * std::numbers::pi / 180.0;
    const auto count = [&](auto pred_fn) {
      return static_cast<double>(std::count_if(report.pairs.begin(), report.pairs.end(), pred_fn)) / total;
    };
    report.rr = count([&](const PairError& p) { return p.te < cfg.rr_translation && p.re < re_max; });
    report.rr_translation_only = count([&](const PairError& p) { return p.te < cfg.rr_translation; });
    report.rr_rotation_only = count([&](const PairError& p) { return p.re < re_max; });
  }
  return report;
}

double overlap_spacing_variance(const MetaShape& meta, double radius) {
  if (meta.points.size() < 2) return 0.0;
  const Points positions = meta.positions();
  const KdTree meta_tree(positions);
  std::vector<KdTree> clouds;
  for (const auto& [id, cloud] : meta.frame_clouds) clouds.emplace_back(cloud);
  const double r2 = radius * radius;

  std::vector<double> spacing;
  for (Eigen::Index i = 0; i < positions.cols(); ++i) {
    int seen_by = 0;
    for (const KdTree& c : clouds)
      if (c.nearest(positions.col(i)).squared_distance <= r2 && ++seen_by >= 2) break;
    if (seen_by < 2) continue;
    spacing.push_back(std::sqrt(meta_tree.nearest(positions.col(i), i).squared_distance));
  }
  if (spacing.size() < 2) return 0.0;
  const double m = mean(spacing);
  double var = 0.0;
  for (double s : spacing) var += (s - m) * (s - m);
  return var / static_cast<double>(spacing.size());
}

}  // namespace imreg
