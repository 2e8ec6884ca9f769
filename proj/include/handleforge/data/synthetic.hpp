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

// Procedural chairs built from cuboids. Every shape is mirror-symmetric about
// the x = 0 plane by construction: parts either straddle the plane (seat,
// back, rail) or come in exact left/right pairs.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>
#include <vector>

#include "io.hpp"
#include "sampling.hpp"

namespace hf::data {

inline constexpr int kSyntheticMaxParts = 10;
inline constexpr int kSyntheticPointCount = 1024;

namespace detail {
inline Cuboid box(const Vec3d& center, const Vec3d& half, double tilt_x = 0.0) {
  Cuboid c;
  c.center = center;
  c.half_extents = half;
  c.rotation.r1 = {1, 0, 0};
  c.rotation.r2 = {0, std::cos(tilt_x), std::sin(tilt_x)};
  return c;
}

inline void add_pair(std::vector<Cuboid>& parts, const Cuboid& right) {
  Cuboid left = right;
  left.center.x = -right.center.x;
  parts.push_back(left);
  parts.push_back(right);
}
}  // namespace detail

/// One chair in its unnormalized frame (y up, the back towards -z).
template <class Rng>
std::vector<Cuboid> synthetic_chair_parts(Rng& rng) {
  auto uniform = [&](double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); };
  auto coin = [&](double p) { return std::bernoulli_distribution(p)(rng); };

  const double w = uniform(0.40, 0.60);    // seat width
  const double d = uniform(0.40, 0.60);    // seat depth
  const double t = uniform(0.03, 0.08);    // seat thickness
  const double hs = uniform(0.35, 0.50);   // seat height
  const double lt = uniform(0.025, 0.05);  // leg / post thickness
  const double bh = uniform(0.30, 0.60);   // back height
  const bool four_legs = coin(0.6);
  const bool solid_back = coin(0.5);
  const bool arms = coin(0.4);
  const bool stretchers = four_legs && coin(0.5);

  std::vector<Cuboid> seat_and_base, back, extras_arms, extras_stretchers;
  seat_and_base.push_back(detail::box({0, hs - t / 2, 0}, {w / 2, t / 2, d / 2}));
  const double leg_h = (hs - t) / 2;
  if (four_legs) {
    detail::add_pair(seat_and_base, detail::box({w / 2 - lt, leg_h, d / 2 - lt}, {lt, leg_h, lt}));
    detail::add_pair(seat_and_base, detail::box({w / 2 - lt, leg_h, -d / 2 + lt}, {lt, leg_h, lt}));
  } else {
    const double pt = uniform(0.02, 0.04);
    detail::add_pair(seat_and_base, detail::box({w / 2 - pt, leg_h, 0}, {pt, leg_h, d / 2}));
  }

  const double bt = uniform(0.02, 0.05);
  if (solid_back) {
    const double tilt = uniform(0.0, 0.25);
    back.push_back(detail::box({0, hs + bh / 2 * std::cos(tilt), -d / 2 + bt - bh / 2 * std::sin(tilt)},
                               {w / 2, bh / 2, bt}, -tilt));
  } else {
    const double rail_h = uniform(0.04, 0.10);
    detail::add_pair(back, detail::box({w / 2 - lt, hs + bh / 2, -d / 2 + lt}, {lt, bh / 2, lt}));
    back.push_back(detail::box({0, hs + bh - rail_h, -d / 2 + lt}, {w / 2 - 2 * lt, rail_h, lt}));
  }

  if (arms) {
    const double at = uniform(0.02, 0.04), ah = uniform(0.10, 0.20);
    detail::add_pair(extras_arms, detail::box({w / 2 + at, hs + ah / 2, 0}, {at, ah / 2, d * 0.4}));
  }
  if (stretchers) {
    const double st = lt * 0.6;
    detail::add_pair(extras_stretchers, detail::box({w / 2 - lt, hs * 0.3, 0}, {st, st, d / 2 - 2 * lt}));
  }

  std::vector<Cuboid> parts = seat_and_base;
  parts.insert(parts.end(), back.begin(), back.end());
  const size_t base = parts.size();
  if (base + extras_arms.size() + extras_stretchers.size() > kSyntheticMaxParts) extras_stretchers.clear();
  if (base + extras_arms.size() + extras_stretchers.size() > kSyntheticMaxParts) extras_arms.clear();
  parts.insert(parts.end(), extras_arms.begin(), extras_arms.end());
  parts.insert(parts.end(), extras_stretchers.begin(), extras_stretchers.end());
  return parts;
}

inline std::mt19937_64 synthetic_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return std::mt19937_64(seq);
}

struct SyntheticShape {
  HandleSet handles;  // normalized to the unit sphere
  NormalizationRecord normalization;
};

/// Shape `index` of the dataset for `seed`; independent of the other shapes.
inline SyntheticShape synthetic_shape(std::uint64_t seed, std::uint64_t index) {
  auto rng = synthetic_rng(seed, index);
  HandleSet raw{HandleType::cuboid, {}, std::nullopt};
  for (const auto& c : synthetic_chair_parts(rng)) raw.handles.push_back(c);
  SyntheticShape out;
  out.handles = normalize_to_unit_sphere(raw, &out.normalization);
  return out;
}

inline std::vector<HandleSet> gen_synthetic_sets(int count, std::uint64_t seed) {
  require(count >= 1, ErrorKind::invalid_argument, "count must be at least 1");
  std::vector<HandleSet> sets;
  sets.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) sets.push_back(synthetic_shape(seed, static_cast<std::uint64_t>(i)).handles);
  return sets;
}

/// Mean over handles of the distance-field similarity between the mirrored
/// handle and its best match in the set; zero for an exactly symmetric set.
inline double mirror_asymmetry(const HandleSet& set, const ProbeGrid& grid = default_probe_grid()) {
  require(!set.empty(), ErrorKind::empty_set, "mirror asymmetry of an empty set");
  std::vector<DistanceSignature> sigs;
  for (const auto& h : set.handles) sigs.push_back(distance_signature(h, grid));
  double total = 0.0;
  for (const auto& h : set.handles) {
    const DistanceSignature mirrored = distance_signature(reflect_x(h), grid);
    double best = std::numeric_limits<double>::infinity();
    for (const auto& s : sigs) best = std::min(best, signature_distance(mirrored, s));
    total += best;
  }
  return total / set.size();
}

/// Writes `count` shapes under `out_dir`: handle sets in handles/, 1024-point
/// surface samples in points/, and manifest.txt indexing both.
inline DatasetManifest gen_synthetic(const std::filesystem::path& out_dir, int count, std::uint64_t seed) {
  require(count >= 1, ErrorKind::invalid_argument, "count must be at least 1");
  DatasetManifest manifest;
  manifest.type = HandleType::cuboid;
  manifest.root = out_dir;
  for (int i = 0; i < count; ++i) {
    char id[32];
    std::snprintf(id, sizeof id, "shape_%04d", i);
    const SyntheticShape shape = synthetic_shape(seed, static_cast<std::uint64_t>(i));
    auto rng = synthetic_rng(seed ^ 0x9e3779b97f4a7c15ULL, static_cast<std::uint64_t>(i));
    const std::string set_path = std::string("handles/") + id + ".json";
    const std::string points_path = std::string("points/") + id + ".xyz";
    save_handle_set(out_dir / set_path, shape.handles);
    save_points(out_dir / points_path, sample_points_on_handles(shape.handles, kSyntheticPointCount, rng));
    manifest.entries.push_back({id, points_path, set_path, shape.normalization});
  }
  save_manifest(out_dir / "manifest.txt", manifest);
  return manifest;
}

}  // namespace hf::data
