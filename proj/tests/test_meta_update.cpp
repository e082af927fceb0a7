#include "oracles.hpp"

#include "imreg/error.hpp"
#include "imreg/meta_update.hpp"

#include <doctest.h>

using namespace imreg;

namespace {

Descriptors axis_descriptors(int n, int axis, int dim = 3) {
  Descriptors d = Descriptors::Zero(dim, n);
  d.row(axis).setOnes();
  return d;
}

}  // namespace

TEST_CASE("merge mode names round-trip") {
  for (MergeMode m : {MergeMode::reservoir, MergeMode::concat, MergeMode::mean})
    CHECK(parse_merge_mode(to_string(m)) == m);
  CHECK_THROWS_AS(parse_merge_mode("median"), InvalidArgument);
}

TEST_CASE("keep-new probability") {
  for (int c = 1; c <= 100; ++c) CHECK(keep_new_probability(c) == 1.0 / (c + 1.0));
  CHECK_THROWS_AS(keep_new_probability(0), InvalidArgument);
}

TEST_CASE("redundant pairs of an identical frame under identity") {
  Rng rng(51);
  const Points pts = oracle::random_points(rng, 30, 1.0);
  const Frame f(0, pts, axis_descriptors(30, 0)), g(1, pts, axis_descriptors(30, 1));
  const MetaShape meta = MetaShape::from_seed(f);
  const auto pairs = find_redundant_pairs(meta, g, Pose::identity(), 0.07);
  REQUIRE(pairs.size() == 30);
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    CHECK(pairs[k].meta_index == static_cast<Eigen::Index>(k));
    CHECK(pairs[k].frame_index == static_cast<Eigen::Index>(k));
    CHECK(pairs[k].distance == 0.0);
  }
  CHECK(find_redundant_pairs(meta, g, Pose(Mat3::Identity(), Vec3(50, 0, 0)), 0.07).empty());
}

TEST_CASE("reservoir merge: coverage, appends and bookkeeping") {
  Points a(3, 2), b(3, 2);
  a << 0, 1, 0, 0, 0, 0;
  b << 0.01, 5, 0, 0, 0, 0;  // first point redundant, second new
  const MetaShape m0 = MetaShape::from_seed(Frame(0, a, axis_descriptors(2, 0)));
  const Frame f(1, b, axis_descriptors(2, 1));
  const MetaShape m1 = reservoir_merge(m0, f, Pose::identity(), 0.07, 3);
  REQUIRE(m1.points.size() == 3);
  CHECK(m1.points[0].coverage == 2);
  CHECK(m1.points[1].coverage == 1);
  CHECK(m1.points[2].coverage == 1);
  CHECK(m1.points[2].origin_frame == 1);
  CHECK(m1.points[2].position == Vec3(5, 0, 0));
  CHECK(m1.merged_ids == std::vector<FrameId>{0, 1});
  CHECK(m1.frame_clouds.at(1) == b);
  CHECK_NOTHROW(m1.validate());
  // the survivor is one of the two candidates, with its own descriptor
  const MetaPoint& s = m1.points[0];
  if (s.origin_frame == 1) {
    CHECK(s.position == Vec3(0.01, 0, 0));
    CHECK(s.descriptor(1) == 1.0);
  } else {
    CHECK(s.position == Vec3(0, 0, 0));
    CHECK(s.descriptor(0) == 1.0);
  }
  CHECK_THROWS_AS(reservoir_merge(m1, f, Pose::identity(), 0.07, 3), InvalidArgument);
  CHECK_THROWS_AS(reservoir_merge(m0, Frame(2, b, axis_descriptors(2, 0, 5)), Pose::identity(), 0.07, 3),
                  InvalidArgument);
}

TEST_CASE("reservoir replacement frequency for a covered point") {
  // one meta point with coverage 3 is replaced with probability 1/4
  const Points p(Vec3(0, 0, 0));
  MetaShape base = MetaShape::from_seed(Frame(0, p, axis_descriptors(1, 0)));
  base.points[0].coverage = 3;
  const Frame f(9, p, axis_descriptors(1, 1));
  int replaced = 0;
  const int trials = 8000;
  for (int t = 0; t < trials; ++t)
    replaced += reservoir_merge(base, f, Pose::identity(), 0.07, static_cast<std::uint64_t>(t)).points[0].origin_frame == 9;
  const double freq = replaced / static_cast<double>(trials);
  // 4 sigma of a binomial(8000, 0.25)
  CHECK(std::abs(freq - 0.25) < 4.0 * std::sqrt(0.25 * 0.75 / trials));
}

TEST_CASE("concat and mean merges") {
  Points a(3, 2), b(3, 2);
  a << 0, 1, 0, 0, 0, 0;
  b << 0.02, 5, 0, 0, 0, 0;
  const MetaShape m0 = MetaShape::from_seed(Frame(0, a, axis_descriptors(2, 0)));
  const Frame f(1, b, axis_descriptors(2, 1));

  const MetaShape cat = alt_merge(m0, f, Pose::identity(), 0.07, MergeMode::concat);
  CHECK(cat.points.size() == 4);

  const MetaShape mean = alt_merge(m0, f, Pose::identity(), 0.07, MergeMode::mean);
  REQUIRE(mean.points.size() == 3);
  CHECK(mean.points[0].position.x() == doctest::Approx(0.01));
  CHECK(mean.points[0].coverage == 2);
  CHECK(mean.points[0].descriptor.norm() == doctest::Approx(1.0));
  CHECK(mean.points[0].descriptor(0) == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(alt_merge(m0, f, Pose::identity(), 0.07, MergeMode::reservoir), InvalidArgument);
  CHECK(merge_frame(m0, f, Pose::identity(), 0.07, MergeMode::concat, 0).points.size() == 4);
}
