#include "oracles.hpp"

#include "imreg/error.hpp"
#include "imreg/io.hpp"

#include <doctest.h>

#include <fstream>
#include <unistd.h>

using namespace imreg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() : path(fs::temp_directory_path() / ("imreg_io_" + std::to_string(::getpid()))) {
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p, std::ios::binary) << s; }

Descriptors unit_descriptors(int dim, int n) {
  Descriptors d = Descriptors::Zero(dim, n);
  for (int i = 0; i < n; ++i) d(i % dim, i) = 1.0;
  return d;
}

}  // namespace

TEST_CASE("ascii PLY with 3 points and a matching descriptor file") {
  TempDir tmp;
  write_text(tmp.path / "a.ply",
             "ply\nformat ascii 1.0\ncomment test\nelement vertex 3\nproperty float x\nproperty float y\n"
             "property float z\nproperty uchar red\nend_header\n0 0 0 255\n1 0.5 -2 0\n3 4 5 7\n");
  io::write_descriptors(tmp.path / "a.desc", unit_descriptors(4, 3));
  const Frame f = io::load_frame({tmp.path / "a.ply", tmp.path / "a.desc", std::nullopt}, 3);
  CHECK(f.size() == 3);
  CHECK(f.id() == 3);
  CHECK(f.keypoints().col(1) == Vec3(1, 0.5, -2));
}

TEST_CASE("binary PLY round trip is bit-identical") {
  TempDir tmp;
  Rng rng(81);
  const Points p = oracle::random_points(rng, 257, 3.0);
  io::write_ply(tmp.path / "b.ply", p);
  CHECK(io::read_ply(tmp.path / "b.ply") == p);
}

TEST_CASE("binary little-endian float PLY with extra properties") {
  TempDir tmp;
  std::ofstream out(tmp.path / "f.ply", std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\nelement vertex 2\nproperty float x\nproperty uchar flag\n"
         "property float y\nproperty float z\nend_header\n";
  const float vals[2][3] = {{1.5f, -2.f, 0.25f}, {3.f, 4.f, 5.f}};
  for (const auto& v : vals) {
    out.write(reinterpret_cast<const char*>(&v[0]), 4);
    out.put(7);
    out.write(reinterpret_cast<const char*>(&v[1]), 8);
  }
  out.close();
  const Points p = io::read_ply(tmp.path / "f.ply");
  CHECK(p.col(0) == Vec3(1.5, -2, 0.25));
  CHECK(p.col(1) == Vec3(3, 4, 5));
}

TEST_CASE("count mismatch names both counts") {
  TempDir tmp;
  io::write_ply(tmp.path / "c.ply", Points::Zero(3, 4));
  io::write_descriptors(tmp.path / "c.desc", unit_descriptors(4, 3));
  try {
    io::load_frame({tmp.path / "c.ply", tmp.path / "c.desc", std::nullopt}, 0);
    FAIL("expected a count mismatch");
  } catch (const CountMismatchError& e) {
    CHECK(e.keypoint_count == 4);
    CHECK(e.descriptor_count == 3);
    const std::string msg = e.what();
    CHECK(msg.find('4') != std::string::npos);
    CHECK(msg.find('3') != std::string::npos);
  }
}

TEST_CASE("malformed files raise parse errors with byte offsets") {
  TempDir tmp;
  write_text(tmp.path / "nomagic.ply", "plx\n");
  CHECK_THROWS_AS(io::read_ply(tmp.path / "nomagic.ply"), ParseError);

  const std::string header = "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\nend_header\n";
  write_text(tmp.path / "nan.ply", header + "0 0 0\nnan 1 2\n");
  try {
    io::read_ply(tmp.path / "nan.ply");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset == header.size() + 6);
  }

  write_text(tmp.path / "short.ply", header + "0 0 0\n");
  CHECK_THROWS_AS(io::read_ply(tmp.path / "short.ply"), ParseError);
  write_text(tmp.path / "bad.ply", "ply\nformat ascii 1.0\nelement vertex two\nend_header\n");
  try {
    io::read_ply(tmp.path / "bad.ply");
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(e.byte_offset == 21);
  }
  write_text(tmp.path / "be.ply", "ply\nformat binary_big_endian 1.0\nelement vertex 0\nend_header\n");
  CHECK_THROWS_AS(io::read_ply(tmp.path / "be.ply"), ParseError);

  write_text(tmp.path / "bad.desc", "IMRX");
  CHECK_THROWS_AS(io::read_descriptors(tmp.path / "bad.desc"), ParseError);
  io::write_descriptors(tmp.path / "trunc.desc", unit_descriptors(4, 3));
  fs::resize_file(tmp.path / "trunc.desc", 20);
  CHECK_THROWS_AS(io::read_descriptors(tmp.path / "trunc.desc"), ParseError);
}

TEST_CASE("descriptors are normalized on load") {
  TempDir tmp;
  Descriptors d = unit_descriptors(3, 2);
  d *= 2.0;
  io::write_descriptors(tmp.path / "n.desc", d);
  const Descriptors back = io::read_descriptors(tmp.path / "n.desc");
  CHECK(back.col(0).norm() == doctest::Approx(1.0));
  CHECK(back.col(1).norm() == doctest::Approx(1.0));
}

TEST_CASE("poses, manifests and global features round-trip") {
  TempDir tmp;
  Rng rng(82);
  std::map<FrameId, Pose> poses;
  for (int i = 0; i < 3; ++i) poses.emplace(i * 2, Pose(oracle::uniform_rotation(rng), Vec3(rng.normal(), 1, 2)));
  io::write_poses(tmp.path / "p.txt", poses);
  const auto back = io::read_poses(tmp.path / "p.txt");
  REQUIRE(back.size() == 3);
  for (const auto& [id, p] : poses) CHECK((back.at(id).matrix() - p.matrix()).norm() < 1e-15);

  Eigen::VectorXd g(4);
  g << 0.5, 0.5, 0.5, 0.5;
  io::write_global_feature(tmp.path / "g.gfeat", g);
  CHECK((io::read_global_feature(tmp.path / "g.gfeat") - g).norm() < 1e-7);

  io::Manifest m;
  m.units = "millimeters";
  m.frames.emplace_back(4, io::FrameFileSet{tmp.path / "x.ply", tmp.path / "x.desc", tmp.path / "g.gfeat"});
  m.gt_poses = tmp.path / "p.txt";
  io::write_manifest(tmp.path / "m.json", m);
  const io::Manifest r = io::read_manifest(tmp.path / "m.json");
  CHECK(r.units == "millimeters");
  CHECK(r.frames.at(0).first == 4);
  CHECK(fs::equivalent(*r.frames.at(0).second.global_feature, tmp.path / "g.gfeat"));
  CHECK(io::read_json(tmp.path / "m.json").at("frames").at(0).at("keypoints") == "x.ply");
}

TEST_CASE("synth config JSON: defaults, overrides and unknown keys") {
  const SynthConfig c = io::synth_config_from_json(io::json::parse(R"({"seed": 7, "overlap_schedule": 0.5})"));
  CHECK(c.seed == 7);
  CHECK(c.overlap_schedule == std::vector<double>{0.5});
  CHECK(c.frame_count == SynthConfig{}.frame_count);
  CHECK_THROWS_AS(io::synth_config_from_json(io::json::parse(R"({"sed": 7})")), InvalidArgument);
}
