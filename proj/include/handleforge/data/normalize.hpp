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

#include <algorithm>
#include <vector>

#include "../metrics.hpp"

namespace hf::data {

using PointCloud = std::vector<Vec3d>;

/// normalized = (x + translation) * scale.
struct NormalizationRecord {
  Vec3d translation{0, 0, 0};
  double scale = 1.0;

  Vec3d apply(const Vec3d& p) const { return (p + translation) * scale; }
  Vec3d invert(const Vec3d& p) const { return p / scale - translation; }
};

namespace detail {
inline NormalizationRecord record_for(const Vec3d& centroid, double radius) {
  require(radius > 0.0 && std::isfinite(radius), ErrorKind::invalid_argument,
          "cannot normalize an input with zero diameter");
  return {-centroid, 1.0 / radius};
}

// Farthest distance from centroid to the handle's solid.
inline double handle_extent(const Handle& h, const Vec3d& centroid) {
  if (const auto* c = std::get_if<Cuboid>(&h)) {
    const Mat3d r = rotation_from_pair(c->rotation);
    double best = 0.0;
    for (int sx = -1; sx <= 1; sx += 2)
      for (int sy = -1; sy <= 1; sy += 2)
        for (int sz = -1; sz <= 1; sz += 2) {
          const Vec3d corner = c->center + r * Vec3d{sx * c->half_extents.x, sy * c->half_extents.y, sz * c->half_extents.z};
          best = std::max(best, norm(corner - centroid));
        }
    return best;
  }
  const auto& t = std::get<SphereTriangle>(h);
  double best = 0.0;
  for (int i = 0; i < 3; ++i) best = std::max(best, norm(t.centers[i] - centroid) + t.radii[i]);
  return best;
}

inline Vec3d handle_anchor(const Handle& h) {
  if (const auto* c = std::get_if<Cuboid>(&h)) return c->center;
  const auto& t = std::get<SphereTriangle>(h);
  return (t.centers[0] + t.centers[1] + t.centers[2]) / 3.0;
}
}  // namespace detail

/// Centroid to the origin, then uniform scaling so the farthest point has norm 1.
inline PointCloud normalize_to_unit_sphere(const PointCloud& points, NormalizationRecord* record_out = nullptr) {
  require(!points.empty(), ErrorKind::empty_set, "cannot normalize an empty point cloud");
  Vec3d centroid{0, 0, 0};
  for (const auto& p : points) centroid += p;
  centroid = centroid / static_cast<double>(points.size());
  double radius = 0.0;
  for (const auto& p : points) radius = std::max(radius, norm(p - centroid));
  const NormalizationRecord rec = detail::record_for(centroid, radius);
  PointCloud out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(rec.apply(p));
  if (record_out) *record_out = rec;
  return out;
}

inline PointCloud denormalize(const PointCloud& points, const NormalizationRecord& rec) {
  PointCloud out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(rec.invert(p));
  return out;
}

/// Applies a record to a handle set: centers translate and scale, extents and
/// radii scale, rotations are unchanged.
inline HandleSet apply_normalization(const HandleSet& set, const NormalizationRecord& rec) {
  HandleSet out = set;
  for (auto& h : out.handles) {
    if (auto* c = std::get_if<Cuboid>(&h)) {
      c->center = rec.apply(c->center);
      c->half_extents = c->half_extents * rec.scale;
    } else {
      auto& t = std::get<SphereTriangle>(h);
      for (auto& c2 : t.centers) c2 = rec.apply(c2);
      for (auto& r : t.radii) r *= rec.scale;
    }
  }
  return out;
}

inline HandleSet denormalize(const HandleSet& set, const NormalizationRecord& rec) {
  HandleSet out = set;
  for (auto& h : out.handles) {
    if (auto* c = std::get_if<Cuboid>(&h)) {
      c->center = rec.invert(c->center);
      c->half_extents = c->half_extents / rec.scale;
    } else {
      auto& t = std::get<SphereTriangle>(h);
      for (auto& c2 : t.centers) c2 = rec.invert(c2);
      for (auto& r : t.radii) r /= rec.scale;
    }
  }
  return out;
}

/// Handle sets use the mean of the handle centers as centroid and the exact
/// farthest extent of the solids (cuboid corners, sphere surfaces) as radius.
inline HandleSet normalize_to_unit_sphere(const HandleSet& set, NormalizationRecord* record_out = nullptr) {
  require(!set.empty(), ErrorKind::empty_set, "cannot normalize an empty handle set");
  Vec3d centroid{0, 0, 0};
  for (const auto& h : set.handles) centroid += detail::handle_anchor(h);
  centroid = centroid / static_cast<double>(set.size());
  double radius = 0.0;
  for (const auto& h : set.handles) radius = std::max(radius, detail::handle_extent(h, centroid));
  const NormalizationRecord rec = detail::record_for(centroid, radius);
  if (record_out) *record_out = rec;
  return apply_normalization(set, rec);
}

}  // namespace hf::data
