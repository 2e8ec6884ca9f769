// Copyright 2026 The HandleForge Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#pragma once

// File formats: handle-set JSON, Wavefront OBJ (v/f subset), labelled and
// plain point clouds, dataset manifests and OBJ export of handle sets.

#include <json.hpp>

#include <array>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "fit.hpp"
#include "mesh.hpp"

namespace hf::data {

using json = nlohmann::json;

inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Canonical text form: fixed key order, one handle per line, 17 significant digits.
inline std::string handle_set_to_string(const HandleSet& set) {
  std::string out = "{\n  \"handle_type\": \"" + std::string(to_string(set.type)) + "\",\n  \"handles\": [";
  for (int i = 0; i < set.size(); ++i) {
    out += i ? ",\n    [" : "\n    [";
    const HandleParams p = params_of(set.handles[i]);
    for (int k = 0; k < kHandleDim; ++k) out += (k ? ", " : "") + format_number(p[k]);
    out += "]";
  }
  out += set.empty() ? "]" : "\n  ]";
  if (set.existence) {
    out += ",\n  \"existence\": [";
    for (size_t i = 0; i < set.existence->size(); ++i) out += (i ? ", " : "") + format_number((*set.existence)[i]);
    out += "]";
  }
  out += "\n}\n";
  return out;
}

namespace detail {
inline double finite_number(const json& v, const std::string& field) {
  require(v.is_number(), ErrorKind::parse, field + ": expected a number");
  const double d = v.get<double>();
  require(std::isfinite(d), ErrorKind::non_finite, field + ": value is not finite");
  return d;
}
}  // namespace detail

/// Parses a handle set from an already-decoded JSON object (the wire format
/// of the service uses the same schema).
inline HandleSet handle_set_from_json(const json& doc) {
  require(doc.is_object(), ErrorKind::parse, "handle set: expected a JSON object");
  require(doc.contains("handle_type") && doc["handle_type"].is_string(), ErrorKind::parse,
          "handle_type: missing or not a string");
  HandleSet set;
  set.type = parse_handle_type(doc["handle_type"].get<std::string>());
  require(doc.contains("handles") && doc["handles"].is_array(), ErrorKind::parse, "handles: missing or not an array");
  const auto& handles = doc["handles"];
  for (size_t i = 0; i < handles.size(); ++i) {
    const std::string field = "handles[" + std::to_string(i) + "]";
    require(handles[i].is_array() && handles[i].size() == kHandleDim, ErrorKind::parse,
            field + ": expected an array of 12 numbers");
    HandleParams p;
    for (int k = 0; k < kHandleDim; ++k)
      p[k] = detail::finite_number(handles[i][k], field + "[" + std::to_string(k) + "]");
    set.handles.push_back(handle_from_params(set.type, p));
  }
  if (doc.contains("existence") && !doc["existence"].is_null()) {
    const auto& ex = doc["existence"];
    require(ex.is_array(), ErrorKind::parse, "existence: expected an array");
    std::vector<double> values;
    for (size_t i = 0; i < ex.size(); ++i)
      values.push_back(detail::finite_number(ex[i], "existence[" + std::to_string(i) + "]"));
    set.existence = std::move(values);
  }
  return set;
}

inline json handle_set_to_json(const HandleSet& set) {
  json doc;
  doc["handle_type"] = std::string(to_string(set.type));
  doc["handles"] = json::array();
  for (const auto& h : set.handles) {
    const HandleParams p = params_of(h);
    doc["handles"].push_back(std::vector<double>(p.begin(), p.end()));
  }
  if (set.existence) doc["existence"] = *set.existence;
  return doc;
}

namespace detail {
inline std::pair<int, int> line_and_column(const std::string& text, size_t offset) {
  int line = 1, col = 1;
  for (size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write '" + path.string() + "'");
  out << content;
  require(static_cast<bool>(out), ErrorKind::io, "write failed for '" + path.string() + "'");
}
}  // namespace detail

inline HandleSet parse_handle_set(const std::string& text, const std::string& origin = "<memory>") {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const auto [line, col] = detail::line_and_column(text, e.byte > 0 ? e.byte - 1 : 0);
    fail(ErrorKind::parse, origin + ":" + std::to_string(line) + ":" + std::to_string(col) + ": malformed JSON (offset " +
                               std::to_string(e.byte) + ")");
  } catch (const json::exception& e) {
    fail(ErrorKind::parse, origin + ": " + e.what());
  }
  try {
    HandleSet set = handle_set_from_json(doc);
    set.validate(true);
    return set;
  } catch (const Error& e) {
    throw Error(e.kind(), origin + ": " + e.what());
  }
}

inline HandleSet load_handle_set(const std::filesystem::path& path) {
  return parse_handle_set(detail::read_file(path), path.string());
}

inline void save_handle_set(const std::filesystem::path& path, const HandleSet& set) {
  detail::write_file(path, handle_set_to_string(set));
}

// ---------------------------------------------------------------------------
// Wavefront OBJ subset: `v x y z` and `f a b c` (v/vt/vn forms accepted,
// polygons fan-triangulated, negative indices resolved).

inline TriangleMesh parse_obj(const std::string& text, const std::string& origin = "<memory>") {
  TriangleMesh mesh;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  auto where = [&] { return origin + ":" + std::to_string(line_no) + ": "; };
  while (std::getline(in, line)) {
    ++line_no;
    std::stringstream ls(line);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;
    if (tag == "v") {
      double x, y, z;
      require(static_cast<bool>(ls >> x >> y >> z), ErrorKind::parse, where() + "vertex needs three coordinates");
      require(std::isfinite(x) && std::isfinite(y) && std::isfinite(z), ErrorKind::non_finite,
              where() + "vertex is not finite");
      mesh.vertices.push_back({x, y, z});
    } else if (tag == "f") {
      std::vector<int> idx;
      std::string tok;
      while (ls >> tok) {
        int v = 0;
        try {
          v = std::stoi(tok.substr(0, tok.find('/')));
        } catch (const std::logic_error&) {
          fail(ErrorKind::parse, where() + "bad face index '" + tok + "'");
        }
        if (v < 0) v = static_cast<int>(mesh.vertices.size()) + v + 1;
        require(v >= 1 && v <= static_cast<int>(mesh.vertices.size()), ErrorKind::parse,
                where() + "face index out of range");
        idx.push_back(v - 1);
      }
      require(idx.size() >= 3, ErrorKind::parse, where() + "face needs at least three vertices");
      for (size_t k = 1; k + 1 < idx.size(); ++k) mesh.triangles.push_back({idx[0], idx[k], idx[k + 1]});
    }
  }
  return mesh;
}

inline TriangleMesh load_obj(const std::filesystem::path& path) { return parse_obj(detail::read_file(path), path.string()); }

inline std::string mesh_to_obj(const TriangleMesh& mesh) {
  std::string out;
  for (const auto& v : mesh.vertices)
    out += "v " + format_number(v.x) + " " + format_number(v.y) + " " + format_number(v.z) + "\n";
  for (const auto& t : mesh.triangles)
    out += "f " + std::to_string(t[0] + 1) + " " + std::to_string(t[1] + 1) + " " + std::to_string(t[2] + 1) + "\n";
  return out;
}

inline void save_obj(const std::filesystem::path& path, const TriangleMesh& mesh) {
  detail::write_file(path, mesh_to_obj(mesh));
}

namespace detail {
inline void append_cuboid(TriangleMesh& mesh, const Cuboid& c) {
  const int base = static_cast<int>(mesh.vertices.size());
  const Mat3d r = rotation_from_pair(c.rotation);
  for (int i = 0; i < 8; ++i) {
    const Vec3d local{(i & 1 ? 1.0 : -1.0) * c.half_extents.x, (i & 2 ? 1.0 : -1.0) * c.half_extents.y,
                      (i & 4 ? 1.0 : -1.0) * c.half_extents.z};
    mesh.vertices.push_back(c.center + r * local);
  }
  // Outward-facing quads as corner bit patterns, split into two triangles each.
  static constexpr int quads[6][4] = {{0, 4, 6, 2}, {1, 3, 7, 5}, {0, 1, 5, 4}, {2, 6, 7, 3}, {0, 2, 3, 1}, {4, 5, 7, 6}};
  for (const auto& q : quads) {
    mesh.triangles.push_back({base + q[0], base + q[1], base + q[2]});
    mesh.triangles.push_back({base + q[0], base + q[2], base + q[3]});
  }
}

// Icosahedron subdivided once: 42 vertices, 80 faces.
inline TriangleMesh unit_icosphere() {
  const double t = (1.0 + std::sqrt(5.0)) / 2.0;
  TriangleMesh m;
  const double raw[12][3] = {{-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t}, {0, 1, t},
                             {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
  for (const auto& v : raw) m.vertices.push_back(Vec3d{v[0], v[1], v[2]} / norm(Vec3d{v[0], v[1], v[2]}));
  m.triangles = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9}, {5, 11, 4},
                 {11, 10, 2}, {10, 7, 6}, {7, 1, 8},   {3, 9, 4},  {3, 4, 2},   {3, 2, 6}, {3, 6, 8},
                 {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};
  std::map<std::pair<int, int>, int> midpoints;
  auto midpoint = [&](int a, int b) {
    const auto key = std::minmax(a, b);
    auto it = midpoints.find(key);
    if (it != midpoints.end()) return it->second;
    const Vec3d mid = (m.vertices[a] + m.vertices[b]) / 2.0;
    m.vertices.push_back(mid / norm(mid));
    const int id = static_cast<int>(m.vertices.size()) - 1;
    midpoints[key] = id;
    return id;
  };
  std::vector<std::array<int, 3>> refined;
  for (const auto& f : m.triangles) {
    const int a = midpoint(f[0], f[1]), b = midpoint(f[1], f[2]), c = midpoint(f[2], f[0]);
    refined.push_back({f[0], a, c});
    refined.push_back({f[1], b, a});
    refined.push_back({f[2], c, b});
    refined.push_back({a, b, c});
  }
  m.triangles = std::move(refined);
  return m;
}

inline void append_sphere(TriangleMesh& mesh, const Vec3d& center, double radius) {
  static const TriangleMesh unit = unit_icosphere();
  const int base = static_cast<int>(mesh.vertices.size());
  for (const auto& v : unit.vertices) mesh.vertices.push_back(center + v * radius);
  for (const auto& t : unit.triangles) mesh.triangles.push_back({base + t[0], base + t[1], base + t[2]});
}
}  // namespace detail

/// Triangulated geometry for a handle set: 8 vertices / 12 triangles per
/// cuboid, and an icosphere per distinct vertex sphere of a sphere-triangle.
/// Handles with existence below `existence_threshold` are skipped.
inline TriangleMesh handles_to_mesh(const HandleSet& set, double existence_threshold = 0.5) {
  TriangleMesh mesh;
  const HandleSet kept = set.thresholded(existence_threshold);
  for (const auto& h : kept.handles) {
    if (const auto* c = std::get_if<Cuboid>(&h)) {
      detail::append_cuboid(mesh, *c);
    } else {
      const auto& t = std::get<SphereTriangle>(h);
      for (int i = 0; i < 3; ++i) {
        bool duplicate = false;
        for (int j = 0; j < i; ++j) duplicate |= t.centers[j] == t.centers[i] && t.radii[j] == t.radii[i];
        if (!duplicate) detail::append_sphere(mesh, t.centers[i], t.radii[i]);
      }
    }
  }
  return mesh;
}

inline void export_obj(const std::filesystem::path& path, const HandleSet& set, double existence_threshold = 0.5) {
  save_obj(path, handles_to_mesh(set, existence_threshold));
}

// ---------------------------------------------------------------------------
// Point clouds: `x y z` per line; labelled parts: `label x y z` per line.

inline PointCloud parse_points(const std::string& text, const std::string& origin = "<memory>") {
  PointCloud out;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "v") {  // OBJ vertex lines are accepted as points
      first.clear();
      ls >> first;
    }
    double x = 0, y = 0, z = 0;
    try {
      x = std::stod(first);
    } catch (const std::logic_error&) {
      fail(ErrorKind::parse, origin + ":" + std::to_string(line_no) + ": expected 'x y z'");
    }
    require(static_cast<bool>(ls >> y >> z), ErrorKind::parse, origin + ":" + std::to_string(line_no) + ": expected 'x y z'");
    require(std::isfinite(x) && std::isfinite(y) && std::isfinite(z), ErrorKind::non_finite,
            origin + ":" + std::to_string(line_no) + ": point is not finite");
    out.push_back({x, y, z});
  }
  return out;
}

inline PointCloud load_points(const std::filesystem::path& path) {
  return parse_points(detail::read_file(path), path.string());
}

inline void save_points(const std::filesystem::path& path, const PointCloud& points) {
  std::string out;
  for (const auto& p : points) out += format_number(p.x) + " " + format_number(p.y) + " " + format_number(p.z) + "\n";
  detail::write_file(path, out);
}

/// Segmented shape from `label x y z` lines; parts are ordered by label.
inline SegmentedShape parse_labelled_points(const std::string& text, const std::string& origin = "<memory>") {
  std::map<long, PointCloud> parts;
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    std::stringstream ls(line);
    long label;
    double x, y, z;
    require(static_cast<bool>(ls >> label >> x >> y >> z), ErrorKind::parse,
            origin + ":" + std::to_string(line_no) + ": expected 'label x y z'");
    require(std::isfinite(x) && std::isfinite(y) && std::isfinite(z), ErrorKind::non_finite,
            origin + ":" + std::to_string(line_no) + ": point is not finite");
    parts[label].push_back({x, y, z});
  }
  SegmentedShape shape;
  shape.id = origin;
  for (auto& [label, pts] : parts) shape.parts.push_back(std::move(pts));
  return shape;
}

inline SegmentedShape load_labelled_points(const std::filesystem::path& path) {
  SegmentedShape s = parse_labelled_points(detail::read_file(path), path.string());
  s.id = path.stem().string();
  return s;
}

// ---------------------------------------------------------------------------
// Dataset manifest: header `# handleforge-manifest 1 handle_type=<type>`, then
// one `shape_id input_path handleset_path` record per line, paths relative to
// the manifest's directory. An optional normalization record may follow as
// `tx ty tz scale`.

struct ManifestEntry {
  std::string shape_id;
  std::string input_path;
  std::string handle_set_path;
  std::optional<NormalizationRecord> normalization;
};

struct DatasetManifest {
  HandleType type = HandleType::cuboid;
  std::vector<ManifestEntry> entries;
  std::filesystem::path root;  // directory the paths are relative to
};

inline std::string manifest_to_string(const DatasetManifest& m) {
  std::string out = "# handleforge-manifest 1 handle_type=" + std::string(to_string(m.type)) + "\n";
  for (const auto& e : m.entries) {
    out += e.shape_id + " " + e.input_path + " " + e.handle_set_path;
    if (e.normalization) {
      const auto& n = *e.normalization;
      out += " " + format_number(n.translation.x) + " " + format_number(n.translation.y) + " " +
             format_number(n.translation.z) + " " + format_number(n.scale);
    }
    out += "\n";
  }
  return out;
}

inline void save_manifest(const std::filesystem::path& path, const DatasetManifest& m) {
  detail::write_file(path, manifest_to_string(m));
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  const std::string text = detail::read_file(path);
  DatasetManifest m;
  m.root = path.parent_path();
  std::stringstream in(text);
  std::string line;
  int line_no = 0;
  bool header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto pos = line.find("handle_type=");
      if (pos != std::string::npos) {
        m.type = parse_handle_type(line.substr(pos + 12));
        header = true;
      }
      continue;
    }
    std::stringstream ls(line);
    ManifestEntry e;
    require(static_cast<bool>(ls >> e.shape_id >> e.input_path >> e.handle_set_path), ErrorKind::parse,
            path.string() + ":" + std::to_string(line_no) + ": expected 'shape_id input_path handleset_path'");
    double tx, ty, tz, s;
    if (ls >> tx >> ty >> tz >> s) e.normalization = NormalizationRecord{{tx, ty, tz}, s};
    m.entries.push_back(std::move(e));
  }
  require(header, ErrorKind::parse, path.string() + ": missing manifest header");
  return m;
}

/// Loads every handle set referenced by a manifest, checking the handle type.
inline std::vector<HandleSet> load_manifest_sets(const DatasetManifest& m) {
  std::vector<HandleSet> sets;
  for (const auto& e : m.entries) {
    HandleSet s = load_handle_set(m.root / e.handle_set_path);
    require(s.type == m.type, ErrorKind::variant_mismatch, e.handle_set_path + ": handle type differs from manifest");
    s.validate();
    sets.push_back(std::move(s));
  }
  return sets;
}

}  // namespace hf::data
