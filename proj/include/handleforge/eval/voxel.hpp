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

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "../core/parallel.hpp"
#include "../metrics.hpp"

namespace hf::eval {

struct GridSpec {
  int resolution = 32;
  Vec3d lower{-1, -1, -1};
  Vec3d upper{1, 1, 1};

  bool operator==(const GridSpec&) const = default;
  long long cell_count() const { return static_cast<long long>(resolution) * resolution * resolution; }
  Vec3d cell_size() const { return (upper - lower) / static_cast<double>(resolution); }
  // Cells are row-major with x slowest and z fastest.
  long long index(int ix, int iy, int iz) const { return (static_cast<long long>(ix) * resolution + iy) * resolution + iz; }
  Vec3d cell_center(int ix, int iy, int iz) const {
    const Vec3d h = cell_size();
    return {lower.x + (ix + 0.5) * h.x, lower.y + (iy + 0.5) * h.y, lower.z + (iz + 0.5) * h.z};
  }
};

struct OccupancyGrid {
  GridSpec spec;
  std::vector<std::uint8_t> cells;  // one byte per cell, 0 or 1

  explicit OccupancyGrid(GridSpec s = {}) : spec(s), cells(static_cast<size_t>(s.cell_count()), 0) {}

  long long occupied() const {
    long long n = 0;
    for (auto c : cells) n += c;
    return n;
  }
  double occupied_fraction() const { return static_cast<double>(occupied()) / static_cast<double>(cells.size()); }
  bool operator==(const OccupancyGrid&) const = default;
};

namespace detail {
// Center and radius of a sphere enclosing the handle's solid, used to skip
// cells that cannot be inside.
inline std::pair<Vec3d, double> bounding_sphere(const Handle& h) {
  if (const auto* c = std::get_if<Cuboid>(&h)) return {c->center, norm(c->half_extents)};
  const auto& t = std::get<SphereTriangle>(h);
  const Vec3d m = (t.centers[0] + t.centers[1] + t.centers[2]) / 3.0;
  double r = 0.0;
  for (int i = 0; i < 3; ++i) r = std::max(r, norm(t.centers[i] - m) + t.radii[i]);
  return {m, r};
}
}  // namespace detail

/// A cell is occupied when its center lies inside (distance <= 0) any handle
/// whose existence reaches the threshold. Sphere-triangles use the hull of
/// their three spheres.
inline OccupancyGrid voxelize(const HandleSet& set, const GridSpec& spec = {}, double existence_threshold = 0.5,
                              int hull_resolution = 16) {
  require(spec.resolution >= 1, ErrorKind::invalid_argument, "grid resolution must be positive");
  const HandleSet kept = set.thresholded(existence_threshold);
  OccupancyGrid grid(spec);
  std::vector<std::pair<Vec3d, double>> bounds;
  for (const auto& h : kept.handles) bounds.push_back(detail::bounding_sphere(h));
  parallel_for(spec.resolution, [&](int ix) {
    for (int iy = 0; iy < spec.resolution; ++iy)
      for (int iz = 0; iz < spec.resolution; ++iz) {
        const Vec3d p = spec.cell_center(ix, iy, iz);
        bool inside = false;
        for (size_t k = 0; k < kept.handles.size() && !inside; ++k) {
          if (squared_norm(p - bounds[k].first) > bounds[k].second * bounds[k].second) continue;
          const Handle& h = kept.handles[k];
          const double d = std::holds_alternative<Cuboid>(h)
                               ? cuboid_distance(std::get<Cuboid>(h), p)
                               : sphere_triangle_hull_distance(std::get<SphereTriangle>(h), p, hull_resolution);
          inside = d <= 0.0;
        }
        grid.cells[static_cast<size_t>(spec.index(ix, iy, iz))] = inside ? 1 : 0;
      }
  });
  return grid;
}

/// |a and b| / |a or b|, defined as 1 when both grids are empty.
inline double iou(const OccupancyGrid& a, const OccupancyGrid& b) {
  require(a.spec == b.spec, ErrorKind::shape_mismatch, "iou needs grids with the same resolution and bounds");
  long long inter = 0, uni = 0;
  for (size_t i = 0; i < a.cells.size(); ++i) {
    inter += a.cells[i] & b.cells[i];
    uni += a.cells[i] | b.cells[i];
  }
  return uni == 0 ? 1.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double handle_set_iou(const HandleSet& pred, const HandleSet& gt, const GridSpec& spec = {}) {
  return iou(voxelize(pred, spec), voxelize(gt, spec));
}

// ---------------------------------------------------------------------------
// Occupancy file: a text header
//   HFOCC 1
//   resolution <n>
//   bounds <lx> <ly> <lz> <ux> <uy> <uz>
// followed by the cells bit-packed in index order, least significant bit first.

inline void save_occupancy(const std::filesystem::path& path, const OccupancyGrid& grid) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write '" + path.string() + "'");
  char header[512];
  const auto& s = grid.spec;
  std::snprintf(header, sizeof header, "HFOCC 1\nresolution %d\nbounds %.17g %.17g %.17g %.17g %.17g %.17g\n", s.resolution,
                s.lower.x, s.lower.y, s.lower.z, s.upper.x, s.upper.y, s.upper.z);
  out << header;
  std::vector<std::uint8_t> packed((grid.cells.size() + 7) / 8, 0);
  for (size_t i = 0; i < grid.cells.size(); ++i)
    if (grid.cells[i]) packed[i / 8] |= static_cast<std::uint8_t>(1u << (i % 8));
  out.write(reinterpret_cast<const char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  require(static_cast<bool>(out), ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline OccupancyGrid load_occupancy(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "'");
  std::string magic, key;
  int version = 0;
  GridSpec spec;
  in >> magic >> version;
  require(magic == "HFOCC", ErrorKind::corrupt_file, path.string() + ": not an occupancy grid file");
  require(version == 1, ErrorKind::version_mismatch, path.string() + ": unsupported occupancy version");
  in >> key >> spec.resolution;
  require(in && key == "resolution" && spec.resolution >= 1, ErrorKind::corrupt_file, path.string() + ": bad resolution");
  in >> key >> spec.lower.x >> spec.lower.y >> spec.lower.z >> spec.upper.x >> spec.upper.y >> spec.upper.z;
  require(in && key == "bounds", ErrorKind::corrupt_file, path.string() + ": bad bounds");
  in.get();  // the newline ending the header
  OccupancyGrid grid(spec);
  std::vector<std::uint8_t> packed((grid.cells.size() + 7) / 8, 0);
  in.read(reinterpret_cast<char*>(packed.data()), static_cast<std::streamsize>(packed.size()));
  require(in.gcount() == static_cast<std::streamsize>(packed.size()), ErrorKind::corrupt_file,
          path.string() + ": truncated payload");
  for (size_t i = 0; i < grid.cells.size(); ++i) grid.cells[i] = (packed[i / 8] >> (i % 8)) & 1u;
  return grid;
}

}  // namespace hf::eval
