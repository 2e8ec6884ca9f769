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

// Random instance generators and brute-force oracles shared by the suites.

#include <cmath>
#include <filesystem>
#include <string>
#include <random>
#include <vector>

#include "handleforge/metrics.hpp"

namespace hf::testing {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline Vec3d uniform_vec(Rng& rng, double lo, double hi) {
  return {uniform(rng, lo, hi), uniform(rng, lo, hi), uniform(rng, lo, hi)};
}

inline RotationPair random_pair(Rng& rng) {
  for (;;) {
    RotationPair p{uniform_vec(rng, -1, 1), uniform_vec(rng, -1, 1)};
    const Vec3d b1 = p.r1 / norm(p.r1);
    if (norm(p.r1) > 0.1 && norm(p.r2 - b1 * dot(b1, p.r2)) > 0.1) return p;
  }
}

inline Cuboid random_cuboid(Rng& rng, double center_range = 0.5, double lo = 0.05, double hi = 0.6) {
  return {uniform_vec(rng, -center_range, center_range), uniform_vec(rng, lo, hi), random_pair(rng)};
}

inline SphereTriangle random_sphere_triangle(Rng& rng) {
  SphereTriangle t;
  for (int i = 0; i < 3; ++i) {
    t.centers[i] = uniform_vec(rng, -0.7, 0.7);
    t.radii[i] = uniform(rng, 0.05, 0.4);
  }
  return t;
}

inline HandleSet random_cuboid_set(Rng& rng, int n) {
  HandleSet s{HandleType::cuboid, {}, std::nullopt};
  for (int i = 0; i < n; ++i) s.handles.push_back(random_cuboid(rng));
  return s;
}

inline std::vector<double> random_existence(Rng& rng, int n, double lo = 0.05, double hi = 0.95) {
  std::vector<double> e(static_cast<size_t>(n));
  for (auto& v : e) v = uniform(rng, lo, hi);
  return e;
}

/// Minimum distance from p to about `samples` surface points: each face gets
/// an area-proportional share laid out as a regular lattice that includes the
/// face boundary, so edges and corners are sampled exactly.
inline double sampled_surface_distance(const Cuboid& c, const Vec3d& p, int samples) {
  const Mat3d r = rotation_from_pair(c.rotation);
  const double l[3] = {c.half_extents.x, c.half_extents.y, c.half_extents.z};
  const double total = 2.0 * (l[1] * l[2] + l[0] * l[2] + l[0] * l[1]);
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const int u = (a + 1) % 3, v = (a + 2) % 3;
    const double share = samples * (l[u] * l[v]) / total;  // per face
    const int rows = std::max(2, static_cast<int>(std::lround(std::sqrt(share * l[u] / std::max(l[v], 1e-12)))));
    const int cols = std::max(2, static_cast<int>(std::lround(share / rows)));
    for (int side = -1; side <= 1; side += 2)
      for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) {
          double local[3];
          local[a] = side * l[a];
          local[u] = -l[u] + 2 * l[u] * i / (rows - 1);
          local[v] = -l[v] + 2 * l[v] * j / (cols - 1);
          const Vec3d q = c.center + r * Vec3d{local[0], local[1], local[2]};
          best = std::min(best, norm(p - q));
        }
  }
  return best;
}

/// Fresh directory under the system temp path, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() / ("handleforge_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace hf::testing
