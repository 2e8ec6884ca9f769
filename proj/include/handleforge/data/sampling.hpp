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
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "mesh.hpp"
#include "normalize.hpp"

namespace hf::data {

namespace detail {
// Picks an index proportionally to the weights via the cumulative sum.
template <class Rng>
size_t pick_weighted(const std::vector<double>& cumulative, Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, cumulative.back());
  const double r = u(rng);
  const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), r);
  return std::min(static_cast<size_t>(it - cumulative.begin()), cumulative.size() - 1);
}

template <class Rng>
Vec3d unit_direction(Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    const Vec3d d{n(rng), n(rng), n(rng)};
    const double len = norm(d);
    if (len > 1e-12) return d / len;
  }
}
}  // namespace detail

/// Area-weighted uniform samples on the handle surfaces: the six faces of each
/// cuboid, and the three vertex spheres of each sphere-triangle. When every
/// surface has zero area the handle anchors are returned instead.
template <class Rng>
PointCloud sample_points_on_handles(const HandleSet& set, int count, Rng& rng) {
  require(!set.empty(), ErrorKind::empty_set, "cannot sample an empty handle set");
  struct Patch {
    int handle;
    int part;  // face 0..5 or sphere 0..2
  };
  std::vector<Patch> patches;
  std::vector<double> cumulative;
  double running = 0.0;
  for (int h = 0; h < set.size(); ++h) {
    if (const auto* c = std::get_if<Cuboid>(&set.handles[h])) {
      const Vec3d l = c->half_extents;
      const double areas[3] = {4 * l.y * l.z, 4 * l.x * l.z, 4 * l.x * l.y};
      for (int f = 0; f < 6; ++f) {
        running += areas[f / 2];
        patches.push_back({h, f});
        cumulative.push_back(running);
      }
    } else {
      const auto& t = std::get<SphereTriangle>(set.handles[h]);
      for (int s = 0; s < 3; ++s) {
        running += 4.0 * std::numbers::pi * t.radii[s] * t.radii[s];
        patches.push_back({h, s});
        cumulative.push_back(running);
      }
    }
  }
  PointCloud out;
  out.reserve(static_cast<size_t>(count));
  if (running <= 0.0) {
    for (int i = 0; i < count; ++i) out.push_back(detail::handle_anchor(set.handles[i % set.size()]));
    return out;
  }
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < count; ++i) {
    const Patch& p = patches[detail::pick_weighted(cumulative, rng)];
    const Handle& h = set.handles[p.handle];
    if (const auto* c = std::get_if<Cuboid>(&h)) {
      const int axis = p.part / 2;
      const double sign = (p.part % 2) ? 1.0 : -1.0;
      Vec3d local{u(rng) * c->half_extents.x, u(rng) * c->half_extents.y, u(rng) * c->half_extents.z};
      local[axis] = sign * c->half_extents[axis];
      out.push_back(c->center + rotation_from_pair(c->rotation) * local);
    } else {
      const auto& t = std::get<SphereTriangle>(h);
      out.push_back(t.centers[p.part] + detail::unit_direction(rng) * t.radii[p.part]);
    }
  }
  return out;
}

/// Area-weighted uniform samples on a triangle mesh.
template <class Rng>
PointCloud sample_points_on_mesh(const TriangleMesh& mesh, int count, Rng& rng) {
  require(!mesh.triangles.empty(), ErrorKind::empty_set, "cannot sample a mesh without triangles");
  std::vector<double> cumulative;
  double running = 0.0;
  for (const auto& t : mesh.triangles) {
    running += triangle_area(mesh, t);
    cumulative.push_back(running);
  }
  require(running > 0.0, ErrorKind::invalid_argument, "mesh has zero surface area");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  PointCloud out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) {
    const auto& t = mesh.triangles[detail::pick_weighted(cumulative, rng)];
    double a = u(rng), b = u(rng);
    if (a + b > 1.0) {
      a = 1.0 - a;
      b = 1.0 - b;
    }
    const Vec3d& v0 = mesh.vertices[t[0]];
    out.push_back(v0 + (mesh.vertices[t[1]] - v0) * a + (mesh.vertices[t[2]] - v0) * b);
  }
  return out;
}

namespace detail {
inline double directed_hausdorff(const PointCloud& a, const PointCloud& b) {
  double worst = 0.0;
  for (const auto& p : a) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& q : b) {
      best = std::min(best, squared_norm(p - q));
      if (best <= worst) break;  // cannot raise the running maximum
    }
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}
}  // namespace detail

/// Symmetric Hausdorff distance between two point clouds.
inline double hausdorff(const PointCloud& a, const PointCloud& b) {
  require(!a.empty() && !b.empty(), ErrorKind::empty_set, "hausdorff needs non-empty point clouds");
  return std::max(detail::directed_hausdorff(a, b), detail::directed_hausdorff(b, a));
}

}  // namespace hf::data
