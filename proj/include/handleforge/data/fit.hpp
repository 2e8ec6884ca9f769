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

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "normalize.hpp"

namespace hf::data {

struct SegmentedShape {
  std::string id;
  std::vector<PointCloud> parts;
  std::string source_mesh;
};

/// Oriented box from the principal axes of a part. Center is the centroid,
/// axes are covariance eigenvectors by descending eigenvalue, each column
/// signed so its largest-magnitude entry is positive, with the third column
/// replaced by the cross product of the first two. Half-extents are half
/// of the projected span along each axis.
inline Cuboid fit_cuboid_pca(const PointCloud& part) {
  require(!part.empty(), ErrorKind::empty_set, "cannot fit a cuboid to an empty part");
  Eigen::Vector3d centroid = Eigen::Vector3d::Zero();
  for (const auto& p : part) centroid += Eigen::Vector3d(p.x, p.y, p.z);
  centroid /= static_cast<double>(part.size());
  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  for (const auto& p : part) {
    const Eigen::Vector3d d = Eigen::Vector3d(p.x, p.y, p.z) - centroid;
    cov += d * d.transpose();
  }
  cov /= static_cast<double>(part.size());

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> solver(cov);
  Eigen::Matrix3d axes;
  for (int i = 0; i < 3; ++i) axes.col(i) = solver.eigenvectors().col(2 - i);  // descending
  for (int i = 0; i < 2; ++i) {
    Eigen::Index arg = 0;
    axes.col(i).cwiseAbs().maxCoeff(&arg);
    if (axes(arg, i) < 0) axes.col(i) = -axes.col(i);
  }
  axes.col(2) = axes.col(0).cross(axes.col(1));

  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (const auto& p : part) {
    const Eigen::Vector3d local = axes.transpose() * (Eigen::Vector3d(p.x, p.y, p.z) - centroid);
    lo = lo.cwiseMin(local);
    hi = hi.cwiseMax(local);
  }
  const Eigen::Vector3d half = (hi - lo) / 2.0;
  Cuboid c;
  c.center = {centroid.x(), centroid.y(), centroid.z()};
  c.half_extents = {half.x(), half.y(), half.z()};
  c.rotation.r1 = {axes(0, 0), axes(1, 0), axes(2, 0)};
  c.rotation.r2 = {axes(0, 1), axes(1, 1), axes(2, 1)};
  return c;
}

/// Keeps the `k` largest cuboids by volume (stable: ties keep the lower
/// original index), ordered by descending volume.
inline HandleSet select_top_by_volume(const std::vector<Cuboid>& cuboids, int k = 30) {
  std::vector<int> order(cuboids.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return cuboids[a].volume() > cuboids[b].volume(); });
  if (static_cast<int>(order.size()) > k) order.resize(static_cast<size_t>(k));
  HandleSet out{HandleType::cuboid, {}, std::nullopt};
  for (int i : order) out.handles.push_back(cuboids[i]);
  return out;
}

/// Fits one cuboid per part and keeps the top-k by volume.
inline HandleSet fit_shape(const SegmentedShape& shape, int k = 30) {
  std::vector<Cuboid> cuboids;
  for (const auto& part : shape.parts) cuboids.push_back(fit_cuboid_pca(part));
  return select_top_by_volume(cuboids, k);
}

}  // namespace hf::data
