#include "imreg/synth_eval.hpp"

#include "imreg/error.hpp"
#include "imreg/random.hpp"
#include "imreg/refinement.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <unordered_map>
#include <unordered_set>

namespace imreg {

void SynthConfig::validate() const {
  if (frame_count < 2) throw InvalidArgument("synth: need at least 2 frames");
  if (points_per_frame < 3) throw InvalidArgument("synth: need at least 3 points per frame");
  if (overlap_schedule.empty() ||
      (overlap_schedule.size() != 1 && overlap_schedule.size() != static_cast<std::size_t>(frame_count - 1)))
    throw InvalidArgument("synth: overlap schedule needs 1 or frame_count - 1 entries");
  for (double f : overlap_schedule)
    if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument("synth: overlap fractions must be in (0, 1]");
  if (!(keypoint_noise >= 0.0) || !(descriptor_noise >= 0.0))
    throw InvalidArgument("synth: noise levels must be >= 0");
  if (descriptor_dim < 2) throw InvalidArgument("synth: descriptor dimension must be >= 2");
  if (!(outlier_fraction >= 0.0 && outlier_fraction <= 1.0))
    throw InvalidArgument("synth: outlier fraction must be in [0, 1]");
  if (!(repeatability > 0.0 && repeatability <= 1.0))
    throw InvalidArgument("synth: repeatability must be in (0, 1]");
  if ((extent.array() <= 0.0).any()) throw InvalidArgument("synth: extent must be positive");
  if (!(tau > 0.0) || !(min_spacing > tau)) throw InvalidArgument("synth: need min_spacing > tau > 0");
}

double SynthConfig::overlap(int link) const {
  return overlap_schedule.size() == 1 ? overlap_schedule.front()
                                      : overlap_schedule[static_cast<std::size_t>(link)];
}

Eigen::VectorXd cell_descriptor(const Vec3& world, double cell_size, int dim) {
  std::uint64_t h = 0x1f83d9abfb41bd6bULL;
  for (int a = 0; a < 3; ++a) {
    const auto q = static_cast<std::int64_t>(std::floor(world(a) / cell_size));
    h = mix64(h ^ static_cast<std::uint64_t>(q));
  }
  Eigen::VectorXd d(dim);
  for (int k = 0; k < dim; ++k)
    d(k) = static_cast<double>(mix64(h + static_cast<std::uint64_t>(k)) >> 11) * 0x1.0p-52 - 1.0;
  return d.normalized();
}

namespace {

struct CellKey {
  std::int64_t x, y, z;
  bool operator==(const CellKey&) const = default;
};

struct CellHash {
  std::size_t operator()(const CellKey& k) const {
    return mix64(static_cast<std::uint64_t>(k.x) ^ mix64(static_cast<std::uint64_t>(k.y) ^
                                                           mix64(static_cast<std::uint64_t>(k.z))));
  }
};

CellKey cell_of(const Vec3& p, double size) {
  return {static_cast<std::int64_t>(std::floor(p.x() / size)),
          static_cast<std::int64_t>(std::floor(p.y() / size)),
          static_cast<std::int64_t>(std::floor(p.z() / size))};
}

// Greedy dart throwing: at most one keypoint per descriptor cell and a
// minimum spacing between keypoints, so distinct world points never share a
// descriptor and never fall within tau of each other.
class KeypointSet {
 public:
  KeypointSet(double descriptor_cell, double spacing) : cell_(descriptor_cell), spacing_(spacing) {}

  bool offer(const Vec3& p) {
    const CellKey dc = cell_of(p, cell_);
    if (used_cells_.count(dc)) return false;
    const CellKey sc = cell_of(p, spacing_);
    for (std::int64_t dx = -1; dx <= 1; ++dx)
      for (std::int64_t dy = -1; dy <= 1; ++dy)
        for (std::int64_t dz = -1; dz <= 1; ++dz) {
          const auto it = grid_.find({sc.x + dx, sc.y + dy, sc.z + dz});
          if (it == grid_.end()) continue;
          for (std::size_t idx : it->second)
            if ((points_[idx] - p).norm() < spacing_) return false;
        }
    used_cells_.insert(dc);
    grid_[sc].push_back(points_.size());
    points_.push_back(p);
    return true;
  }

  const std::vector<Vec3>& points() const { return points_; }

 private:
  double cell_, spacing_;
  std::vector<Vec3> points_;
  std::unordered_set<CellKey, CellHash> used_cells_;
  std::unordered_map<CellKey, std::vector<std::size_t>, CellHash> grid_;
};

struct Rect {
  Vec3 origin, u, v;  // origin + a u + b v, a, b in [0, 1]
  double area() const { return u.cross(v).norm(); }
};

void add_box(std::vector<Rect>& out, const Vec3& lo, const Vec3& size) {
  const Vec3 ex = Vec3::UnitX() * size.x(), ey = Vec3::UnitY() * size.y(), ez = Vec3::UnitZ() * size.z();
  out.push_back({lo + ez, ex, ey});  // top
  out.push_back({lo, ex, ez});
  out.push_back({lo + ey, ex, ez});
  out.push_back({lo, ey, ez});
  out.push_back({lo + ex, ey, ez});
}

void sample_rects(const std::vector<Rect>& rects, KeypointSet& set, Rng& rng, double spacing,
                  std::size_t limit = SIZE_MAX) {
  for (const Rect& r : rects) {
    const auto darts = static_cast<long>(std::ceil(4.0 * r.area() / (spacing * spacing)));
    for (long k = 0; k < darts && set.points().size() < limit; ++k)
      set.offer(r.origin + rng.uniform01() * r.u + rng.uniform01() * r.v);
  }
}

void sample_sphere(const Vec3& center, double radius, KeypointSet& set, Rng& rng, double spacing) {
  const auto darts = static_cast<long>(std::ceil(16.0 * std::numbers::pi * radius * radius / (spacing * spacing)));
  for (long k = 0; k < darts; ++k) {
    Vec3 d(rng.normal(), rng.normal(), rng.normal());
    if (d.norm() == 0.0) continue;
    set.offer(center + radius * d.normalized());
  }
}

Mat3 random_rotation(Rng& rng) {
  const double u1 = rng.uniform01(), u2 = rng.uniform01(), u3 = rng.uniform01();
  const double a = std::sqrt(1.0 - u1), b = std::sqrt(u1);
  const double t1 = 2.0 * std::numbers::pi * u2, t2 = 2.0 * std::numbers::pi * u3;
  const Eigen::Quaterniond q(b * std::cos(t2), a * std::sin(t1), a * std::cos(t1), b * std::sin(t2));
  return q.normalized().toRotationMatrix();
}

Eigen::VectorXd random_unit(Rng& rng, int dim) {
  Eigen::VectorXd v(dim);
  do {
    for (int k = 0; k < dim; ++k) v(k) = rng.normal();
  } while (v.norm() == 0.0);
  return v.normalized();
}

Eigen::VectorXd noisy(Eigen::VectorXd base, double sigma, Rng& rng) {
  if (sigma > 0.0)
    for (Eigen::Index k = 0; k < base.size(); ++k) base(k) += sigma * rng.normal();
  const double n = base.norm();
  return n > 0.0 ? Eigen::VectorXd(base / n) : random_unit(rng, static_cast<int>(base.size()));
}

struct Observation {
  Vec3 world;
  Eigen::VectorXd descriptor;
};

Frame make_frame(FrameId id, const std::vector<Observation>& seen, const Vec3& center, double noise,
                 Rng& rng) {
  const Mat3 r = random_rotation(rng);
  const Pose gt(r, -r * center);  // world -> frame local
  Points kp(3, static_cast<Eigen::Index>(seen.size()));
  Descriptors desc(seen.front().descriptor.size(), static_cast<Eigen::Index>(seen.size()));
  for (std::size_t i = 0; i < seen.size(); ++i) {
    Vec3 p = gt.apply(seen[i].world);
    if (noise > 0.0) p += noise * Vec3(rng.normal(), rng.normal(), rng.normal());
    kp.col(static_cast<Eigen::Index>(i)) = p;
    desc.col(static_cast<Eigen::Index>(i)) = seen[i].descriptor;
  }
  return Frame(id, std::move(kp), std::move(desc), gt);
}

}  // namespace

std::vector<OverlapEdge> overlap_graph(const std::vector<Frame>& frames, double tau) {
  std::vector<OverlapEdge> edges;
  for (std::size_t i = 0; i < frames.size(); ++i) {
    for (std::size_t j = i + 1; j < frames.size(); ++j) {
      const auto& gi = frames[i].gt_pose();
      const auto& gj = frames[j].gt_pose();
      if (!gi || !gj) throw InvalidArgument("overlap_graph: frames need ground-truth poses");
      const double o = overlap_ratio(frames[i].keypoints(), frames[j].keypoints(),
                                     compose(*gj, invert(*gi)), tau);
      if (o > 0.0) edges.push_back({frames[i].id(), frames[j].id(), o});
    }
  }
  return edges;
}

SyntheticScene generate_scene(const SynthConfig& cfg) {
  cfg.validate();
  Rng rng(cfg.seed);
  const double cell = 2.0 * cfg.tau;
  const Vec3 ext = cfg.extent;

  std::vector<Rect> rects{
      {Vec3::Zero(), Vec3::UnitX() * ext.x(), Vec3::UnitY() * ext.y()},                    // floor
      {Vec3(0, 0, 0), Vec3::UnitX() * ext.x(), Vec3::UnitZ() * ext.z()},                   // walls
      {Vec3(0, ext.y(), 0), Vec3::UnitX() * ext.x(), Vec3::UnitZ() * ext.z()},
      {Vec3(0, 0, 0), Vec3::UnitY() * ext.y(), Vec3::UnitZ() * ext.z()},
      {Vec3(ext.x(), 0, 0), Vec3::UnitY() * ext.y(), Vec3::UnitZ() * ext.z()},
  };
  for (int b = 0; b < 6; ++b) {
    const Vec3 size(rng.uniform(0.4, 1.0), rng.uniform(0.4, 1.0), rng.uniform(0.3, 1.2));
    const Vec3 lo(rng.uniform(0.2, ext.x() - size.x() - 0.2), rng.uniform(0.2, ext.y() - size.y() - 0.2), 0.0);
    add_box(rects, lo, size);
  }
  KeypointSet set(cell, cfg.min_spacing);
  sample_rects(rects, set, rng, cfg.min_spacing);
  for (int s = 0; s < 3; ++s) {
    const double radius = rng.uniform(0.2, 0.45);
    sample_sphere(Vec3(rng.uniform(radius, ext.x() - radius), rng.uniform(radius, ext.y() - radius),
                       rng.uniform(radius, ext.z() - radius)),
                  radius, set, rng, cfg.min_spacing);
  }

  // order world keypoints by azimuth around the room centre: the viewing chain
  const Vec3 centre = 0.5 * ext;
  std::vector<std::size_t> order(set.points().size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::vector<double> azimuth(order.size());
  for (std::size_t i = 0; i < order.size(); ++i)
    azimuth[i] = std::atan2(set.points()[i].y() - centre.y(), set.points()[i].x() - centre.x());
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return azimuth[a] < azimuth[b]; });

  const auto window = static_cast<long>(std::lround(cfg.points_per_frame / cfg.repeatability));
  std::vector<long> starts{0};
  for (int link = 0; link + 1 < cfg.frame_count; ++link) {
    const double shared = cfg.overlap(link) * static_cast<double>(window) / cfg.repeatability;
    if (shared > static_cast<double>(window))
      throw InvalidArgument("synth: overlap " + std::to_string(cfg.overlap(link)) +
                            " exceeds what repeatability " + std::to_string(cfg.repeatability) +
                            " allows");
    starts.push_back(starts.back() + window - std::lround(shared));
  }
  const long needed = starts.back() + window;
  if (needed > static_cast<long>(order.size()))
    throw InvalidArgument("synth: overlap schedule needs " + std::to_string(needed) +
                          " world keypoints but the scene has " + std::to_string(order.size()));

  std::vector<FrameId> ids(static_cast<std::size_t>(cfg.frame_count));
  std::iota(ids.begin(), ids.end(), 0);
  for (std::size_t i = ids.size() - 1; i > 0; --i) std::swap(ids[i], ids[rng.index(i + 1)]);

  SyntheticScene scene;
  scene.world.resize(3, static_cast<Eigen::Index>(order.size()));
  for (std::size_t i = 0; i < order.size(); ++i) scene.world.col(static_cast<Eigen::Index>(i)) = set.points()[i];
  for (int f = 0; f < cfg.frame_count; ++f) {
    std::vector<Observation> seen;
    Vec3 view_centre = Vec3::Zero();
    for (long k = starts[static_cast<std::size_t>(f)]; k < starts[static_cast<std::size_t>(f)] + window; ++k) {
      const Vec3& w = set.points()[order[static_cast<std::size_t>(k)]];
      view_centre += w;
      if (rng.uniform01() >= cfg.repeatability) continue;
      Eigen::VectorXd d = rng.uniform01() < cfg.outlier_fraction
                              ? random_unit(rng, cfg.descriptor_dim)
                              : noisy(cell_descriptor(w, cell, cfg.descriptor_dim), cfg.descriptor_noise, rng);
      seen.push_back({w, std::move(d)});
    }
    if (seen.size() < 3) throw InvalidArgument("synth: a frame detected fewer than 3 keypoints");
    view_centre /= static_cast<double>(window);
    // sensor sits between the room centre and the viewed region
    const Vec3 sensor = 0.5 * (centre + view_centre) +
                        Vec3(rng.uniform(-0.2, 0.2), rng.uniform(-0.2, 0.2), rng.uniform(-0.1, 0.1));
    scene.frames.push_back(make_frame(ids[static_cast<std::size_t>(f)], seen, sensor, cfg.keypoint_noise, rng));
    scene.chain.push_back(ids[static_cast<std::size_t>(f)]);
  }
  std::sort(scene.frames.begin(), scene.frames.end(), [](const Frame& a, const Frame& b) { return a.id() < b.id(); });
  scene.overlap_graph = overlap_graph(scene.frames, cfg.tau);
  return scene;
}

SyntheticScene generate_aisle_scene(std::uint64_t seed) {
  constexpr double tau = 0.07, spacing = 0.12, noise = 0.005, desc_noise = 0.03;
  constexpr int dim = 32, distinctive_per_wall = 10;
  const double cell = 2.0 * tau;
  Rng rng(seed);

  // structured block shared by frames 0 and 2
  KeypointSet shared(cell, spacing);
  std::vector<Rect> blocks;
  add_box(blocks, Vec3(2.0, 2.0, 0.0), Vec3(0.8, 0.7, 0.9));
  add_box(blocks, Vec3(3.0, 2.2, 0.0), Vec3(0.6, 0.9, 0.6));
  add_box(blocks, Vec3(2.3, 3.1, 0.0), Vec3(0.9, 0.6, 1.1));
  sample_rects(blocks, shared, rng, spacing, 250);

  // wall patches: A (x = 0) seen by frames 0 and 1, B (y = 0) by frames 1 and 2
  auto wall = [](bool along_y) {
    std::vector<Vec3> pts;
    for (int a = 0; a < 7; ++a)
      for (int b = 0; b < 7; ++b) {
        const double u = 0.3 + 0.15 * a, z = 0.3 + 0.15 * b;
        pts.push_back(along_y ? Vec3(0.0, u, z) : Vec3(u, 0.0, z));
      }
    return pts;
  };
  const std::vector<Vec3> wall_a = wall(true), wall_b = wall(false);
  auto pick_distinctive = [&](std::size_t n) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = n - 1; i > 0; --i) std::swap(idx[i], idx[rng.index(i + 1)]);
    std::vector<bool> flag(n, false);
    for (int k = 0; k < distinctive_per_wall; ++k) flag[idx[static_cast<std::size_t>(k)]] = true;
    return flag;
  };
  const std::vector<bool> distinct_a = pick_distinctive(wall_a.size());
  const std::vector<bool> distinct_b = pick_distinctive(wall_b.size());

  auto own_region = [&](const Vec3& lo, const Vec3& size, std::size_t limit) {
    KeypointSet set(cell, spacing);
    std::vector<Rect> r;
    r.push_back({lo, Vec3::UnitX() * size.x(), Vec3::UnitY() * size.y()});
    add_box(r, lo + Vec3(0.2, 0.2, 0.0), Vec3(0.5, 0.5, size.z()));
    sample_rects(r, set, rng, spacing, limit);
    return set.points();
  };
  const auto own0 = own_region(Vec3(4.0, 0.5, 0.0), Vec3(1.5, 1.5, 0.6), 80);
  const auto own1 = own_region(Vec3(0.6, 0.6, 0.0), Vec3(1.0, 1.0, 0.5), 100);
  const auto own2 = own_region(Vec3(0.5, 4.0, 0.0), Vec3(1.5, 1.5, 0.6), 80);

  auto structured = [&](const Vec3& w) { return noisy(cell_descriptor(w, cell, dim), desc_noise, rng); };
  auto add_all = [&](std::vector<Observation>& seen, const std::vector<Vec3>& pts) {
    for (const Vec3& w : pts) seen.push_back({w, structured(w)});
  };
  auto add_wall = [&](std::vector<Observation>& seen, const std::vector<Vec3>& pts, const std::vector<bool>& distinct) {
    for (std::size_t i = 0; i < pts.size(); ++i)
      seen.push_back({pts[i], distinct[i] ? structured(pts[i]) : random_unit(rng, dim)});
  };
  auto centroid = [](const std::vector<Observation>& seen) {
    Vec3 c = Vec3::Zero();
    for (const auto& o : seen) c += o.world;
    return Vec3(c / static_cast<double>(seen.size()));
  };

  std::vector<Observation> s0, s1, s2;
  add_all(s0, shared.points());
  add_wall(s0, wall_a, distinct_a);
  add_all(s0, own0);
  add_wall(s1, wall_a, distinct_a);
  add_wall(s1, wall_b, distinct_b);
  add_all(s1, own1);
  add_all(s2, shared.points());
  add_wall(s2, wall_b, distinct_b);
  add_all(s2, own2);

  SyntheticScene scene;
  scene.frames.push_back(make_frame(0, s0, centroid(s0), noise, rng));
  scene.frames.push_back(make_frame(1, s1, centroid(s1), noise, rng));
  scene.frames.push_back(make_frame(2, s2, centroid(s2), noise, rng));
  scene.chain = {0, 1, 2};
  std::vector<Vec3> all = shared.points();
  for (const auto* part : {&wall_a, &wall_b, &own0, &own1, &own2}) all.insert(all.end(), part->begin(), part->end());
  scene.world.resize(3, static_cast<Eigen::Index>(all.size()));
  for (std::size_t i = 0; i < all.size(); ++i) scene.world.col(static_cast<Eigen::Index>(i)) = all[i];
  scene.overlap_graph = overlap_graph(scene.frames, tau);
  return scene;
}

}  // namespace imreg
