#include "imreg/io.hpp"

#include "imreg/error.hpp"
#include "imreg/log.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

namespace imreg::io {

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::ofstream open_out(const fs::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, mode);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

// little-endian readers over an in-memory buffer, with byte offsets for errors
class Reader {
 public:
  Reader(std::string data, fs::path path) : data_(std::move(data)), path_(std::move(path)) {}

  std::size_t offset() const { return pos_; }
  std::size_t remaining() const { return data_.size() - pos_; }
  const std::string& data() const { return data_; }
  void seek(std::size_t p) { pos_ = p; }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(path_.string(), pos_, what); }

  void need(std::size_t n) const {
    if (remaining() < n) fail("unexpected end of file (need " + std::to_string(n) + " more bytes)");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(data_[pos_ + static_cast<std::size_t>(i)]);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    const std::uint64_t lo = u32();
    return lo | (static_cast<std::uint64_t>(u32()) << 32);
  }
  float f32() { return std::bit_cast<float>(u32()); }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = data_.substr(pos_, n);
    pos_ += n;
    return s;
  }

 private:
  std::string data_;
  fs::path path_;
  std::size_t pos_ = 0;
};

void put_u32(std::ostream& out, std::uint32_t v) {
  char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<char>((v >> (8 * i)) & 0xff);
  out.write(b, 4);
}
void put_u64(std::ostream& out, std::uint64_t v) {
  put_u32(out, static_cast<std::uint32_t>(v & 0xffffffffULL));
  put_u32(out, static_cast<std::uint32_t>(v >> 32));
}
void put_f32(std::ostream& out, float v) { put_u32(out, std::bit_cast<std::uint32_t>(v)); }

// PLY ----------------------------------------------------------------------

struct PlyProperty {
  std::string name;
  std::string type;        // scalar type, or the item type for lists
  std::string count_type;  // non-empty for list properties
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

std::size_t type_size(const std::string& t) {
  if (t == "char" || t == "uchar" || t == "int8" || t == "uint8") return 1;
  if (t == "short" || t == "ushort" || t == "int16" || t == "uint16") return 2;
  if (t == "int" || t == "uint" || t == "int32" || t == "uint32" || t == "float" || t == "float32") return 4;
  if (t == "double" || t == "float64") return 8;
  return 0;
}

double decode_scalar(const char* p, const std::string& t) {
  auto le = [p](std::size_t n) {
    std::uint64_t v = 0;
    for (std::size_t i = n; i-- > 0;) v = (v << 8) | static_cast<unsigned char>(p[i]);
    return v;
  };
  if (t == "float" || t == "float32") return std::bit_cast<float>(static_cast<std::uint32_t>(le(4)));
  if (t == "double" || t == "float64") return std::bit_cast<double>(le(8));
  if (t == "char" || t == "int8") return static_cast<std::int8_t>(le(1));
  if (t == "uchar" || t == "uint8") return static_cast<double>(le(1));
  if (t == "short" || t == "int16") return static_cast<std::int16_t>(le(2));
  if (t == "ushort" || t == "uint16") return static_cast<double>(le(2));
  if (t == "int" || t == "int32") return static_cast<std::int32_t>(le(4));
  return static_cast<double>(le(4));
}

}  // namespace

Points read_ply(const fs::path& path) {
  Reader r(read_file(path), path);
  const std::string& data = r.data();
  auto next_line = [&]() {
    const std::size_t end = data.find('\n', r.offset());
    if (end == std::string::npos) r.fail("unterminated PLY header");
    std::string line = data.substr(r.offset(), end - r.offset());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    r.seek(end + 1);
    return line;
  };

  if (next_line() != "ply") r.fail("missing 'ply' magic");
  std::string format;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::size_t line_start = r.offset();
    const std::string line = next_line();
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "end_header") break;
    if (kw.empty() || kw == "comment" || kw == "obj_info") continue;
    if (kw == "format") {
      std::string version;
      ls >> format >> version;
      continue;
    }
    if (kw == "element") {
      PlyElement e;
      long long count = -1;
      ls >> e.name >> count;
      if (!ls || count < 0) {
        r.seek(line_start);
        r.fail("malformed element line '" + line + "'");
      }
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
      continue;
    }
    if (kw == "property") {
      if (elements.empty()) {
        r.seek(line_start);
        r.fail("property before any element");
      }
      PlyProperty p;
      std::string first;
      ls >> first;
      if (first == "list") ls >> p.count_type >> p.type >> p.name;
      else {
        p.type = first;
        ls >> p.name;
      }
      if (!ls || type_size(p.type) == 0 || (!p.count_type.empty() && type_size(p.count_type) == 0)) {
        r.seek(line_start);
        r.fail("malformed property line '" + line + "'");
      }
      elements.back().props.push_back(std::move(p));
      continue;
    }
    r.seek(line_start);
    r.fail("unknown header keyword '" + kw + "'");
  }
  if (format != "ascii" && format != "binary_little_endian")
    r.fail("unsupported PLY format '" + format + "'");

  std::size_t vertex_el = elements.size();
  for (std::size_t e = 0; e < elements.size(); ++e)
    if (elements[e].name == "vertex") {
      vertex_el = e;
      break;
    }
  if (vertex_el == elements.size()) r.fail("no vertex element");
  const PlyElement& vertex = elements[vertex_el];
  int ix = -1, iy = -1, iz = -1;
  for (std::size_t k = 0; k < vertex.props.size(); ++k) {
    const PlyProperty& p = vertex.props[k];
    const bool is_float = p.type == "float" || p.type == "float32" || p.type == "double" || p.type == "float64";
    if (p.name == "x" || p.name == "y" || p.name == "z") {
      if (!is_float || !p.count_type.empty()) r.fail("vertex " + p.name + " must be a float or double scalar");
      (p.name == "x" ? ix : p.name == "y" ? iy : iz) = static_cast<int>(k);
    }
  }
  if (ix < 0 || iy < 0 || iz < 0) r.fail("vertex element lacks x, y or z");

  Points pts(3, static_cast<Eigen::Index>(vertex.count));
  auto store = [&](std::size_t i, std::array<double, 3> xyz, std::size_t at) {
    for (double v : xyz)
      if (!std::isfinite(v)) throw ParseError(path.string(), at, "non-finite coordinate in vertex " + std::to_string(i));
    pts.col(static_cast<Eigen::Index>(i)) = Vec3(xyz[0], xyz[1], xyz[2]);
  };

  if (format == "ascii") {
    // one line per item for every element that precedes the vertices
    for (std::size_t e = 0; e < vertex_el; ++e)
      for (std::size_t i = 0; i < elements[e].count; ++i) next_line();
    for (std::size_t i = 0; i < vertex.count; ++i) {
      const std::size_t at = r.offset();
      if (r.remaining() == 0) r.fail("expected " + std::to_string(vertex.count) + " vertices, got " + std::to_string(i));
      std::istringstream ls(next_line());
      std::vector<double> vals;
      std::string tok;
      while (ls >> tok) {
        try {
          std::size_t used = 0;
          vals.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          if (tok == "nan" || tok == "NaN" || tok == "-nan") vals.push_back(std::numeric_limits<double>::quiet_NaN());
          else throw ParseError(path.string(), at, "bad number '" + tok + "' in vertex " + std::to_string(i));
        }
      }
      if (vals.size() < vertex.props.size())
        throw ParseError(path.string(), at, "vertex " + std::to_string(i) + " has too few values");
      store(i, {vals[static_cast<std::size_t>(ix)], vals[static_cast<std::size_t>(iy)], vals[static_cast<std::size_t>(iz)]}, at);
    }
    return pts;
  }

  // binary: fixed-size records are required up to and including the vertices
  for (std::size_t e = 0; e <= vertex_el; ++e)
    for (const PlyProperty& p : elements[e].props)
      if (!p.count_type.empty()) r.fail("list properties before vertex data are not supported");
  for (std::size_t e = 0; e < vertex_el; ++e) {
    std::size_t stride = 0;
    for (const PlyProperty& p : elements[e].props) stride += type_size(p.type);
    r.need(stride * elements[e].count);
    r.seek(r.offset() + stride * elements[e].count);
  }
  std::vector<std::size_t> offsets;
  std::size_t stride = 0;
  for (const PlyProperty& p : vertex.props) {
    offsets.push_back(stride);
    stride += type_size(p.type);
  }
  for (std::size_t i = 0; i < vertex.count; ++i) {
    const std::size_t at = r.offset();
    r.need(stride);
    const char* rec = data.data() + at;
    auto get = [&](int k) {
      return decode_scalar(rec + offsets[static_cast<std::size_t>(k)], vertex.props[static_cast<std::size_t>(k)].type);
    };
    store(i, {get(ix), get(iy), get(iz)}, at);
    r.seek(at + stride);
  }
  return pts;
}

void write_ply(const fs::path& path, const Points& points) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << "ply\nformat binary_little_endian 1.0\nelement vertex " << points.cols()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  for (Eigen::Index i = 0; i < points.cols(); ++i)
    for (int a = 0; a < 3; ++a) put_u64(out, std::bit_cast<std::uint64_t>(points(a, i)));
}

void write_meta_ply(const fs::path& path, const MetaShape& meta) {
  auto out = open_out(path);
  out << "ply\nformat ascii 1.0\nelement vertex " << meta.points.size()
      << "\nproperty double x\nproperty double y\nproperty double z\n"
         "property int origin_frame\nproperty int coverage\nend_header\n";
  out << std::setprecision(17);
  for (const MetaPoint& p : meta.points)
    out << p.position.x() << ' ' << p.position.y() << ' ' << p.position.z() << ' ' << p.origin_frame << ' '
        << p.coverage << '\n';
}

// Feature files --------------------------------------------------------------

Descriptors read_descriptors(const fs::path& path) {
  Reader r(read_file(path), path);
  if (r.bytes(4) != "IMRD") {
    r.seek(0);
    r.fail("bad descriptor magic (expected IMRD)");
  }
  const std::uint32_t count = r.u32();
  const std::uint32_t dim = r.u32();
  if (dim == 0) r.fail("descriptor dimension is zero");
  r.need(static_cast<std::size_t>(count) * dim * 4);
  Descriptors d(dim, count);
  bool warned = false;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t row_start = r.offset();
    for (std::uint32_t k = 0; k < dim; ++k) {
      const float v = r.f32();
      if (!std::isfinite(v)) throw ParseError(path.string(), r.offset() - 4, "non-finite descriptor value");
      d(k, i) = v;
    }
    const double n = d.col(i).norm();
    if (!(n > 0.0)) throw ParseError(path.string(), row_start, "zero descriptor " + std::to_string(i));
    if (std::abs(n - 1.0) > 1e-3 && !warned) {
      log::warn("{}: descriptor {} has norm {:.6f}; normalizing", path.string(), i, n);
      warned = true;
    }
    d.col(i) /= n;
  }
  if (r.remaining() != 0) r.fail("trailing bytes after descriptor data");
  return d;
}

void write_descriptors(const fs::path& path, const Descriptors& descriptors) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write("IMRD", 4);
  put_u32(out, static_cast<std::uint32_t>(descriptors.cols()));
  put_u32(out, static_cast<std::uint32_t>(descriptors.rows()));
  for (Eigen::Index i = 0; i < descriptors.cols(); ++i)
    for (Eigen::Index k = 0; k < descriptors.rows(); ++k) put_f32(out, static_cast<float>(descriptors(k, i)));
}

Eigen::VectorXd read_global_feature(const fs::path& path) {
  Reader r(read_file(path), path);
  if (r.bytes(4) != "IMRG") {
    r.seek(0);
    r.fail("bad global feature magic (expected IMRG)");
  }
  const std::uint32_t dim = r.u32();
  if (dim == 0) r.fail("global feature dimension is zero");
  Eigen::VectorXd g(dim);
  for (std::uint32_t k = 0; k < dim; ++k) {
    const float v = r.f32();
    if (!std::isfinite(v)) throw ParseError(path.string(), r.offset() - 4, "non-finite global feature value");
    g(k) = v;
  }
  if (r.remaining() != 0) r.fail("trailing bytes after global feature");
  const double n = g.norm();
  if (!(n > 0.0)) throw ParseError(path.string(), 8, "zero global feature");
  return g / n;
}

void write_global_feature(const fs::path& path, const Eigen::VectorXd& feature) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write("IMRG", 4);
  put_u32(out, static_cast<std::uint32_t>(feature.size()));
  for (Eigen::Index k = 0; k < feature.size(); ++k) put_f32(out, static_cast<float>(feature(k)));
}

Frame load_frame(const FrameFileSet& files, FrameId id, std::optional<Pose> gt) {
  Points kp = read_ply(files.keypoints);
  Descriptors d = read_descriptors(files.descriptors);
  if (kp.cols() != d.cols())
    throw CountMismatchError(files.descriptors.string(), static_cast<std::uint64_t>(kp.cols()),
                             static_cast<std::uint64_t>(d.cols()));
  if (kp.cols() == 0) throw ParseError(files.keypoints.string(), 0, "frame has no keypoints");
  std::optional<Eigen::VectorXd> g;
  if (files.global_feature) g = read_global_feature(*files.global_feature);
  return Frame(id, std::move(kp), std::move(d), std::move(gt), std::move(g));
}

// Poses ---------------------------------------------------------------------

std::string format_pose_line(FrameId id, const Pose& pose) {
  std::ostringstream ss;
  ss << id << std::setprecision(17);
  const Mat4 m = pose.matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) ss << ' ' << m(r, c);
  return ss.str();
}

std::map<FrameId, Pose> read_poses(const fs::path& path) {
  const std::string data = read_file(path);
  std::map<FrameId, Pose> poses;
  std::size_t pos = 0;
  while (pos < data.size()) {
    std::size_t end = data.find('\n', pos);
    if (end == std::string::npos) end = data.size();
    const std::string line = data.substr(pos, end - pos);
    std::istringstream ls(line);
    FrameId id;
    if (ls >> id) {
      Mat4 m;
      for (int r = 0; r < 4; ++r)
        for (int c = 0; c < 4; ++c)
          if (!(ls >> m(r, c))) throw ParseError(path.string(), pos, "pose line needs an id and 16 numbers");
      if (!m.allFinite()) throw ParseError(path.string(), pos, "non-finite pose entry");
      if (poses.count(id)) throw ParseError(path.string(), pos, "duplicate pose for frame " + std::to_string(id));
      poses.emplace(id, Pose::from_matrix(m));
    } else if (line.find_first_not_of(" \t\r") != std::string::npos && line[line.find_first_not_of(" \t\r")] != '#') {
      throw ParseError(path.string(), pos, "malformed pose line");
    }
    pos = end + 1;
  }
  return poses;
}

void write_poses(const fs::path& path, const std::map<FrameId, Pose>& poses) {
  auto out = open_out(path);
  for (const auto& [id, pose] : poses) out << format_pose_line(id, pose) << '\n';
}

// Manifest --------------------------------------------------------------------

json read_json(const fs::path& path) {
  if (!fs::exists(path)) throw Error("no such file: " + path.string());
  try {
    return json::parse(read_file(path));
  } catch (const json::parse_error& e) {
    throw ParseError(path.string(), e.byte, e.what());
  }
}

void write_json(const fs::path& path, const json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

Manifest read_manifest(const fs::path& path) {
  const json j = read_json(path);
  const fs::path base = path.parent_path();
  auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
  Manifest m;
  try {
    m.units = j.value("units", std::string("meters"));
    for (const json& f : j.at("frames")) {
      FrameFileSet files{resolve(f.at("keypoints").get<std::string>()), resolve(f.at("descriptors").get<std::string>()),
                         std::nullopt};
      if (f.contains("global_feature")) files.global_feature = resolve(f.at("global_feature").get<std::string>());
      m.frames.emplace_back(f.at("id").get<FrameId>(), std::move(files));
    }
    if (j.contains("gt_poses")) m.gt_poses = resolve(j.at("gt_poses").get<std::string>());
    if (j.contains("overlap_graph")) m.overlap_graph = resolve(j.at("overlap_graph").get<std::string>());
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, std::string("invalid manifest: ") + e.what());
  }
  return m;
}

void write_manifest(const fs::path& path, const Manifest& manifest) {
  const fs::path base = path.parent_path();
  auto rel = [&](const fs::path& p) { return fs::relative(p, base.empty() ? fs::path(".") : base).generic_string(); };
  json frames = json::array();
  for (const auto& [id, files] : manifest.frames) {
    json f{{"id", id}, {"keypoints", rel(files.keypoints)}, {"descriptors", rel(files.descriptors)}};
    if (files.global_feature) f["global_feature"] = rel(*files.global_feature);
    frames.push_back(std::move(f));
  }
  json j{{"units", manifest.units}, {"frames", std::move(frames)}};
  if (manifest.gt_poses) j["gt_poses"] = rel(*manifest.gt_poses);
  if (manifest.overlap_graph) j["overlap_graph"] = rel(*manifest.overlap_graph);
  write_json(path, j);
}

std::vector<Frame> load_scene(const Manifest& manifest) {
  std::map<FrameId, Pose> gt;
  if (manifest.gt_poses) gt = read_poses(*manifest.gt_poses);
  std::vector<Frame> frames;
  for (const auto& [id, files] : manifest.frames) {
    std::optional<Pose> g;
    if (auto it = gt.find(id); it != gt.end()) g = it->second;
    frames.push_back(load_frame(files, id, g));
  }
  return frames;
}

std::vector<OverlapEdge> read_overlap_graph(const fs::path& path) {
  const json j = read_json(path);
  std::vector<OverlapEdge> edges;
  try {
    for (const json& e : j.at("edges")) edges.push_back({e.at("a").get<FrameId>(), e.at("b").get<FrameId>(), e.at("overlap").get<double>()});
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, std::string("invalid overlap graph: ") + e.what());
  }
  return edges;
}

void write_overlap_graph(const fs::path& path, const std::vector<OverlapEdge>& edges) {
  json arr = json::array();
  for (const OverlapEdge& e : edges) arr.push_back({{"a", e.a}, {"b", e.b}, {"overlap", e.overlap}});
  write_json(path, json{{"edges", std::move(arr)}});
}

Manifest write_scene(const fs::path& dir, const SyntheticScene& scene, const std::string& units) {
  fs::create_directories(dir);
  Manifest m;
  m.units = units;
  std::map<FrameId, Pose> gt;
  for (const Frame& f : scene.frames) {
    std::ostringstream stem;
    stem << "frame_" << std::setw(3) << std::setfill('0') << f.id();
    FrameFileSet files{dir / (stem.str() + ".ply"), dir / (stem.str() + ".desc"), std::nullopt};
    write_ply(files.keypoints, f.keypoints());
    write_descriptors(files.descriptors, f.descriptors());
    if (f.global_feature()) {
      files.global_feature = dir / (stem.str() + ".gfeat");
      write_global_feature(*files.global_feature, *f.global_feature());
    }
    if (f.gt_pose()) gt.emplace(f.id(), *f.gt_pose());
    m.frames.emplace_back(f.id(), std::move(files));
  }
  if (!gt.empty()) {
    m.gt_poses = dir / "gt_poses.txt";
    write_poses(*m.gt_poses, gt);
  }
  m.overlap_graph = dir / "overlap_graph.json";
  write_overlap_graph(*m.overlap_graph, scene.overlap_graph);
  write_manifest(dir / "manifest.json", m);
  return m;
}

// JSON documents -------------------------------------------------------------

json to_json(const PipelineConfig& cfg) {
  return {{"top_k", cfg.top_k},
          {"tau", cfg.tau},
          {"overlap_threshold", cfg.overlap_threshold},
          {"fusion_neighbors", cfg.fusion_neighbors},
          {"pooling_exponent", cfg.pooling_exponent},
          {"ransac",
           {{"iterations", cfg.ransac.iterations},
            {"sample_size", cfg.ransac.sample_size},
            {"min_inliers", cfg.ransac.min_inliers}}},
          {"correspondence_cap", cfg.correspondence_cap},
          {"merge_mode", std::string(to_string(cfg.merge_mode))},
          {"seed", cfg.seed},
          {"max_deferral_passes", cfg.max_deferral_passes},
          {"averaging_iterations", cfg.averaging_iterations},
          {"averaging_convergence", cfg.averaging_convergence},
          {"threads", cfg.threads}};
}

json to_json(const SynthConfig& cfg) {
  return {{"seed", cfg.seed},
          {"frame_count", cfg.frame_count},
          {"points_per_frame", cfg.points_per_frame},
          {"overlap_schedule", cfg.overlap_schedule},
          {"keypoint_noise", cfg.keypoint_noise},
          {"descriptor_dim", cfg.descriptor_dim},
          {"descriptor_noise", cfg.descriptor_noise},
          {"outlier_fraction", cfg.outlier_fraction},
          {"extent", {cfg.extent.x(), cfg.extent.y(), cfg.extent.z()}},
          {"repeatability", cfg.repeatability},
          {"tau", cfg.tau},
          {"min_spacing", cfg.min_spacing}};
}

json to_json(const EvalConfig& cfg) {
  return {{"rr_translation", cfg.rr_translation},
          {"rr_rotation_deg", cfg.rr_rotation_deg},
          {"re_thresholds_deg", cfg.re_thresholds_deg},
          {"te_thresholds", cfg.te_thresholds},
          {"min_overlap", cfg.min_overlap}};
}

json pose_to_json(const Pose& pose) {
  json arr = json::array();
  const Mat4 m = pose.matrix();
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) arr.push_back(m(r, c));
  return arr;
}

json result_to_json(const SceneResult& result, const PipelineConfig& cfg, const std::string& units) {
  json poses = json::object();
  for (const auto& [id, pose] : result.poses) poses[std::to_string(id)] = pose_to_json(pose);
  json steps = json::array();
  for (const StepDiagnostics& s : result.steps) {
    json cands = json::array();
    for (const CandidateAttempt& c : s.candidates)
      cands.push_back({{"frame", c.frame}, {"inlier_count", c.inlier_count},
                       {"correspondences", c.correspondence_count}, {"ok", c.ok}});
    json overlaps = json::array();
    for (const auto& [id, o] : s.overlaps) overlaps.push_back({{"frame", id}, {"overlap", o}});
    json weights = json::array();
    for (const auto& [id, w] : s.weights) weights.push_back({{"frame", id}, {"weight", w}});
    steps.push_back({{"frame", s.frame == -1 ? json(nullptr) : json(s.frame)},
                     {"pass", s.pass},
                     {"inlier_count", s.inlier_count},
                     {"observation_count", s.weights.size()},
                     {"candidates", std::move(cands)},
                     {"overlaps", std::move(overlaps)},
                     {"weights", std::move(weights)}});
  }
  return {{"config", to_json(cfg)},
          {"units", units},
          {"seed_frame", result.seed},
          {"order", result.order},
          {"failed", result.failed},
          {"poses", std::move(poses)},
          {"meta_shape_points", result.meta.points.size()},
          {"steps", std::move(steps)}};
}

json report_to_json(const ErrorReport& report, const EvalConfig& cfg) {
  json pairs = json::array();
  for (const PairError& p : report.pairs)
    pairs.push_back({{"a", p.a}, {"b", p.b}, {"re_rad", p.re}, {"re_deg", p.re * 180.0 / M_PI}, {"te", p.te}});
  json missing = json::array();
  for (const auto& [a, b] : report.missing) missing.push_back({a, b});
  return {{"config", to_json(cfg)},
          {"pairs", std::move(pairs)},
          {"missing_pairs", std::move(missing)},
          {"mean_re_deg", report.mean_re * 180.0 / M_PI},
          {"median_re_deg", report.median_re * 180.0 / M_PI},
          {"mean_te", report.mean_te},
          {"median_te", report.median_te},
          {"re_ecdf", report.re_ecdf},
          {"te_ecdf", report.te_ecdf},
          {"rr", report.rr},
          {"rr_translation_only", report.rr_translation_only},
          {"rr_rotation_only", report.rr_rotation_only}};
}

json estimate_to_json(const PairwiseEstimate& est) {
  json j{{"candidate", est.candidate},
         {"ok", est.ok()},
         {"inlier_count", est.inlier_count},
         {"correspondences", est.correspondence_count},
         {"degenerate", est.degenerate}};
  j["transform"] = est.transform ? pose_to_json(*est.transform) : json(nullptr);
  return j;
}

SynthConfig synth_config_from_json(const json& j) {
  SynthConfig c;
  if (!j.is_object()) throw InvalidArgument("synth config must be a JSON object");
  for (const auto& [key, v] : j.items()) {
    if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "frame_count") c.frame_count = v.get<int>();
    else if (key == "points_per_frame") c.points_per_frame = v.get<int>();
    else if (key == "overlap_schedule") c.overlap_schedule = v.is_array() ? v.get<std::vector<double>>() : std::vector<double>{v.get<double>()};
    else if (key == "keypoint_noise") c.keypoint_noise = v.get<double>();
    else if (key == "descriptor_dim") c.descriptor_dim = v.get<int>();
    else if (key == "descriptor_noise") c.descriptor_noise = v.get<double>();
    else if (key == "outlier_fraction") c.outlier_fraction = v.get<double>();
    else if (key == "extent") {
      const auto e = v.get<std::vector<double>>();
      if (e.size() != 3) throw InvalidArgument("synth config: extent needs 3 values");
      c.extent = Vec3(e[0], e[1], e[2]);
    } else if (key == "repeatability") c.repeatability = v.get<double>();
    else if (key == "tau") c.tau = v.get<double>();
    else if (key == "min_spacing") c.min_spacing = v.get<double>();
    else if (key == "scenario") continue;
    else throw InvalidArgument("synth config: unknown key '" + key + "'");
  }
  c.validate();
  return c;
}

std::map<FrameId, Pose> poses_from_result_json(const json& j) {
  std::map<FrameId, Pose> poses;
  for (const auto& [key, arr] : j.at("poses").items()) {
    const auto v = arr.get<std::vector<double>>();
    if (v.size() != 16) throw InvalidArgument("pose for frame " + key + " needs 16 values");
    Mat4 m;
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) m(r, c) = v[static_cast<std::size_t>(4 * r + c)];
    poses.emplace(std::stoi(key), Pose::from_matrix(m));
  }
  return poses;
}

}  // namespace imreg::io
