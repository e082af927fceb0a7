#include "imreg/error.hpp"
#include "imreg/io.hpp"
#include "imreg/meta_update.hpp"
#include "imreg/pipeline.hpp"
#include "imreg/refinement.hpp"
#include "imreg/synth_eval.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace pybind11::literals;
using namespace imreg;
namespace fs = std::filesystem;

namespace {

// Python sees point sets as (N, 3) arrays and descriptors as (N, D).
using RowPoints = Eigen::Matrix<double, Eigen::Dynamic, 3, Eigen::RowMajor>;
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

Points to_points(const RowPoints& p) { return p.transpose(); }
RowPoints from_points(const Points& p) { return p.transpose(); }

std::vector<ObservedTransform> to_observations(const std::vector<Mat3>& rotations, const std::vector<Vec3>& translations,
                                               const std::vector<double>& weights) {
  if (rotations.size() != weights.size() || (!translations.empty() && translations.size() != weights.size()))
    throw InvalidArgument("observation lists must have equal length");
  std::vector<ObservedTransform> obs;
  for (std::size_t i = 0; i < rotations.size(); ++i)
    obs.push_back({static_cast<FrameId>(i), rotations[i], translations.empty() ? Vec3::Zero() : translations[i], weights[i]});
  return obs;
}

py::dict scene_result(const SceneResult& r, const PipelineConfig& cfg) {
  py::dict d;
  d["seed"] = r.seed;
  d["order"] = r.order;
  d["failed"] = r.failed;
  std::map<FrameId, Mat4> poses;
  for (const auto& [id, p] : r.poses) poses.emplace(id, p.matrix());
  d["poses"] = poses;
  d["meta_points"] = from_points(r.meta.positions());
  std::vector<int> coverage;
  for (const MetaPoint& p : r.meta.points) coverage.push_back(p.coverage);
  d["coverage"] = coverage;
  d["json"] = io::result_to_json(r, cfg, "meters").dump();
  return d;
}

}  // namespace

PYBIND11_MODULE(_imreg, m) {
  m.doc() = "Incremental multiview point cloud registration";

  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<DegenerateError>(m, "DegenerateError", PyExc_ArithmeticError);
  py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);

  py::class_<Pose>(m, "Pose")
      .def(py::init<>())
      .def(py::init<const Mat3&, const Vec3&>(), "rotation"_a, "translation"_a)
      .def_static("from_matrix", &Pose::from_matrix)
      .def_property_readonly("rotation", &Pose::rotation)
      .def_property_readonly("translation", &Pose::translation)
      .def("matrix", &Pose::matrix)
      .def("apply", [](const Pose& p, const RowPoints& pts) { return from_points(p.apply(to_points(pts))); })
      .def("inverse", [](const Pose& p) { return invert(p); })
      .def("__matmul__", [](const Pose& a, const Pose& b) { return compose(a, b); });

  py::class_<Frame>(m, "Frame")
      .def(py::init([](FrameId id, const RowPoints& keypoints, const RowMatrix& descriptors, std::optional<Pose> gt) {
             return Frame(id, to_points(keypoints), descriptors.transpose(), std::move(gt));
           }),
           "id"_a, "keypoints"_a, "descriptors"_a, "gt_pose"_a = std::nullopt)
      .def_property_readonly("id", &Frame::id)
      .def_property_readonly("keypoints", [](const Frame& f) { return from_points(f.keypoints()); })
      .def_property_readonly("descriptors", [](const Frame& f) { return RowMatrix(f.descriptors().transpose()); })
      .def_property_readonly("gt_pose", &Frame::gt_pose)
      .def("__len__", &Frame::size);

  py::class_<PipelineConfig>(m, "PipelineConfig")
      .def(py::init<>())
      .def_readwrite("top_k", &PipelineConfig::top_k)
      .def_readwrite("tau", &PipelineConfig::tau)
      .def_readwrite("overlap_threshold", &PipelineConfig::overlap_threshold)
      .def_readwrite("fusion_neighbors", &PipelineConfig::fusion_neighbors)
      .def_readwrite("seed", &PipelineConfig::seed)
      .def_readwrite("threads", &PipelineConfig::threads)
      .def_property(
          "ransac_iters", [](const PipelineConfig& c) { return c.ransac.iterations; },
          [](PipelineConfig& c, int v) { c.ransac.iterations = v; })
      .def_property(
          "min_inliers", [](const PipelineConfig& c) { return c.ransac.min_inliers; },
          [](PipelineConfig& c, int v) { c.ransac.min_inliers = v; })
      .def_property(
          "merge_mode", [](const PipelineConfig& c) { return std::string(to_string(c.merge_mode)); },
          [](PipelineConfig& c, const std::string& v) { c.merge_mode = parse_merge_mode(v); });

  m.def(
      "register_scene",
      [](std::vector<Frame> frames, const PipelineConfig& cfg) {
        SceneResult r;
        {
          py::gil_scoped_release release;
          r = register_scene(std::move(frames), cfg);
        }
        return scene_result(r, cfg);
      },
      "frames"_a, "config"_a = PipelineConfig{});
  m.def(
      "register_pair",
      [](const Frame& a, const Frame& b, const PipelineConfig& cfg) {
        const PairwiseEstimate e = register_pair(a, b, cfg);
        return py::dict("ok"_a = e.ok(), "inlier_count"_a = e.inlier_count,
                        "correspondences"_a = e.correspondence_count,
                        "transform"_a = e.transform ? py::cast(e.transform->matrix()) : py::none());
      },
      "a"_a, "b"_a, "config"_a = PipelineConfig{});

  m.def(
      "procrustes",
      [](const RowPoints& src, const RowPoints& dst, std::vector<double> weights) {
        return procrustes(to_points(src), to_points(dst), weights);
      },
      "source"_a, "target"_a, "weights"_a = std::vector<double>{});
  m.def(
      "rotation_average",
      [](const Mat3& initial, const std::vector<Mat3>& rotations, const std::vector<double>& weights) {
        return rotation_average(initial, to_observations(rotations, {}, weights));
      },
      "initial"_a, "rotations"_a, "weights"_a);
  m.def(
      "translation_average",
      [](const Mat3& rbar, const std::vector<Mat3>& rotations, const std::vector<Vec3>& translations,
         const std::vector<double>& weights) {
        return translation_average(rbar, to_observations(rotations, translations, weights));
      },
      "averaged_rotation"_a, "rotations"_a, "translations"_a, "weights"_a);
  m.def(
      "overlap_ratio",
      [](const RowPoints& a, const RowPoints& b, const Pose& t, double tau) {
        return overlap_ratio(to_points(a), to_points(b), t, tau);
      },
      "p_i"_a, "p_j"_a, "transform"_a, "tau"_a);
  m.def("keep_new_probability", &keep_new_probability, "coverage"_a);

  m.def(
      "generate_scene",
      [](std::uint64_t seed, int frame_count, int points_per_frame, double overlap) {
        SynthConfig c;
        c.seed = seed;
        c.frame_count = frame_count;
        c.points_per_frame = points_per_frame;
        c.overlap_schedule = {overlap};
        return generate_scene(c).frames;
      },
      "seed"_a = 42, "frame_count"_a = 8, "points_per_frame"_a = 400, "overlap"_a = 0.4);
  m.def(
      "generate_aisle_scene", [](std::uint64_t seed) { return generate_aisle_scene(seed).frames; }, "seed"_a = 42);

  m.def(
      "evaluate",
      [](const std::map<FrameId, Mat4>& pred, const std::map<FrameId, Mat4>& gt) {
        std::map<FrameId, Pose> p, g;
        for (const auto& [id, mat] : pred) p.emplace(id, Pose::from_matrix(mat));
        for (const auto& [id, mat] : gt) g.emplace(id, Pose::from_matrix(mat));
        const ErrorReport r = evaluate_poses(p, g, std::nullopt);
        return py::dict("rr"_a = r.rr, "mean_re"_a = r.mean_re, "mean_te"_a = r.mean_te,
                        "pairs"_a = r.pairs.size(), "missing"_a = r.missing.size());
      },
      "pred"_a, "gt"_a);

  m.def(
      "read_ply", [](const fs::path& p) { return from_points(io::read_ply(p)); }, "path"_a);
  m.def(
      "write_ply", [](const fs::path& p, const RowPoints& pts) { io::write_ply(p, to_points(pts)); }, "path"_a,
      "points"_a);
}
