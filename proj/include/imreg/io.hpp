#pragma once

#include "imreg/core.hpp"
#include "imreg/pipeline.hpp"
#include "imreg/synth_eval.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace imreg::io {

namespace fs = std::filesystem;
using nlohmann::json;

struct FrameFileSet {
  fs::path keypoints;    // PLY, ascii or binary_little_endian, float/double x y z
  fs::path descriptors;  // "IMRD", u32 count, u32 dim, f32 row-major
  std::optional<fs::path> global_feature;  // "IMRG", u32 dim, f32 values
};

// PLY -----------------------------------------------------------------------

Points read_ply(const fs::path& path);
/// Binary little-endian PLY with double x/y/z, so reloads are bit-identical.
void write_ply(const fs::path& path, const Points& points);
/// ASCII PLY: x y z origin_frame coverage per meta point.
void write_meta_ply(const fs::path& path, const MetaShape& meta);

// Binary feature files -------------------------------------------------------

/// Rows are L2-normalized on load; a warning is logged when a stored norm is
/// off by more than 1e-3.
Descriptors read_descriptors(const fs::path& path);
void write_descriptors(const fs::path& path, const Descriptors& descriptors);
Eigen::VectorXd read_global_feature(const fs::path& path);
void write_global_feature(const fs::path& path, const Eigen::VectorXd& feature);

Frame load_frame(const FrameFileSet& files, FrameId id, std::optional<Pose> gt = std::nullopt);

// Poses: one line per frame, "<id> <16 floats of the row-major 4x4 matrix>" --

std::map<FrameId, Pose> read_poses(const fs::path& path);
void write_poses(const fs::path& path, const std::map<FrameId, Pose>& poses);
std::string format_pose_line(FrameId id, const Pose& pose);

// Scene manifest -------------------------------------------------------------

struct Manifest {
  std::string units = "meters";
  std::vector<std::pair<FrameId, FrameFileSet>> frames;  // paths resolved
  std::optional<fs::path> gt_poses;
  std::optional<fs::path> overlap_graph;
};

Manifest read_manifest(const fs::path& path);
/// Paths are written relative to the manifest directory.
void write_manifest(const fs::path& path, const Manifest& manifest);
std::vector<Frame> load_scene(const Manifest& manifest);

std::vector<OverlapEdge> read_overlap_graph(const fs::path& path);
void write_overlap_graph(const fs::path& path, const std::vector<OverlapEdge>& edges);

/// Writes frames, ground truth, overlap graph and manifest.json into `dir`.
Manifest write_scene(const fs::path& dir, const SyntheticScene& scene, const std::string& units = "meters");

// JSON documents -------------------------------------------------------------

json to_json(const PipelineConfig& cfg);
json to_json(const SynthConfig& cfg);
json to_json(const EvalConfig& cfg);
json pose_to_json(const Pose& pose);
/// Deterministic result document; wall-clock timings are left out.
json result_to_json(const SceneResult& result, const PipelineConfig& cfg, const std::string& units);
json report_to_json(const ErrorReport& report, const EvalConfig& cfg);
json estimate_to_json(const PairwiseEstimate& est);

/// Absent keys keep their defaults; unknown keys are rejected.
SynthConfig synth_config_from_json(const json& j);
/// Reads the "poses" object of a result document.
std::map<FrameId, Pose> poses_from_result_json(const json& j);

void write_json(const fs::path& path, const json& j);
json read_json(const fs::path& path);

}  // namespace imreg::io
