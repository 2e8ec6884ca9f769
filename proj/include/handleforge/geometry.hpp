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

// Closed-form geometry of shape handles: the 6D rotation construction, signed
// distances for cuboids and sphere-triangles, probe-grid distance signatures
// and the distance-field similarity between two handles.

#include <Eigen/Core>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "core/dual.hpp"
#include "core/error.hpp"
#include "core/vec3.hpp"

namespace hf {

inline constexpr int kHandleDim = 12;
using HandleParams = std::array<double, kHandleDim>;

enum class HandleType { cuboid, sphere_triangle };

inline std::string_view to_string(HandleType type) {
  return type == HandleType::cuboid ? "cuboid" : "sphere_triangle";
}

inline HandleType parse_handle_type(std::string_view text) {
  if (text == "cuboid") return HandleType::cuboid;
  if (text == "sphere_triangle") return HandleType::sphere_triangle;
  fail(ErrorKind::parse, "handle_type: unknown value '" + std::string(text) + "'");
}

struct RotationPair {
  Vec3d r1{1, 0, 0};
  Vec3d r2{0, 1, 0};
};

namespace detail {
inline constexpr double kDegenerateTolerance = 1e-9;
inline constexpr double kDecodePerturbation = 1e-6;

template <class T>
Vec3<T> lift(const Vec3d& v) {
  return {T(v.x), T(v.y), T(v.z)};
}

template <class T>
int least_aligned_axis(const Vec3<T>& v) {
  const double ax = std::abs(value_of(v.x)), ay = std::abs(value_of(v.y)), az = std::abs(value_of(v.z));
  if (ax <= ay && ax <= az) return 0;
  return ay <= az ? 1 : 2;
}

// Gram-Schmidt on (r1, r2); when perturb is set, degenerate inputs are nudged
// instead of rejected so that decoded network outputs always yield a frame.
template <class T>
Mat3<T> orthonormalize(Vec3<T> r1, Vec3<T> r2, bool perturb) {
  using std::sqrt;
  T n1 = sqrt(dot(r1, r1));
  if (!(value_of(n1) > kDegenerateTolerance)) {
    if (!perturb) fail(ErrorKind::degenerate_rotation, "r1 has (near) zero norm");
    r1.x = r1.x + T(kDecodePerturbation);
    n1 = sqrt(dot(r1, r1));
  }
  const Vec3<T> b1 = r1 / n1;
  Vec3<T> ortho = r2 - b1 * dot(b1, r2);
  T n2 = sqrt(dot(ortho, ortho));
  if (!(value_of(n2) > kDegenerateTolerance)) {
    if (!perturb) fail(ErrorKind::degenerate_rotation, "r2 is (near) parallel to r1");
    Vec3<T> nudge(T(0), T(0), T(0));
    nudge[least_aligned_axis(b1)] = T(kDecodePerturbation);
    r2 = r2 + nudge;
    ortho = r2 - b1 * dot(b1, r2);
    n2 = sqrt(dot(ortho, ortho));
  }
  const Vec3<T> b2 = ortho / n2;
  return {{b1, b2, cross(b1, b2)}};
}
}  // namespace detail

/// Rotation whose first two columns are the Gram-Schmidt orthonormalization
/// of (r1, r2). Throws degenerate_rotation when r1 vanishes or r2 is parallel.
inline Mat3d rotation_from_pair(const RotationPair& pair) {
  return detail::orthonormalize(pair.r1, pair.r2, false);
}

/// Applies the decode-time perturbation to a degenerate pair (identity on
/// well-conditioned pairs) so the stored pair always yields a frame.
inline RotationPair regularize_rotation_pair(RotationPair pair) {
  if (!(norm(pair.r1) > detail::kDegenerateTolerance)) pair.r1.x += detail::kDecodePerturbation;
  const Vec3d b1 = pair.r1 / norm(pair.r1);
  if (!(norm(pair.r2 - b1 * dot(b1, pair.r2)) > detail::kDegenerateTolerance))
    pair.r2[detail::least_aligned_axis(b1)] += detail::kDecodePerturbation;
  return pair;
}

struct Cuboid {
  Vec3d center{0, 0, 0};
  Vec3d half_extents{1, 1, 1};
  RotationPair rotation{};

  HandleParams params() const {
    return {center.x, center.y, center.z, half_extents.x, half_extents.y, half_extents.z,
            rotation.r1.x, rotation.r1.y, rotation.r1.z, rotation.r2.x, rotation.r2.y, rotation.r2.z};
  }
  static Cuboid from_params(const HandleParams& p) {
    return {{p[0], p[1], p[2]}, {p[3], p[4], p[5]}, {{p[6], p[7], p[8]}, {p[9], p[10], p[11]}}};
  }
  double volume() const { return 8.0 * half_extents.x * half_extents.y * half_extents.z; }
};

struct SphereTriangle {
  std::array<Vec3d, 3> centers{};
  std::array<double, 3> radii{};

  HandleParams params() const {
    return {centers[0].x, centers[0].y, centers[0].z, centers[1].x, centers[1].y, centers[1].z,
            centers[2].x, centers[2].y, centers[2].z, radii[0],     radii[1],     radii[2]};
  }
  static SphereTriangle from_params(const HandleParams& p) {
    return {{Vec3d{p[0], p[1], p[2]}, Vec3d{p[3], p[4], p[5]}, Vec3d{p[6], p[7], p[8]}}, {p[9], p[10], p[11]}};
  }
};

using Handle = std::variant<Cuboid, SphereTriangle>;

inline HandleType type_of(const Handle& h) {
  return std::holds_alternative<Cuboid>(h) ? HandleType::cuboid : HandleType::sphere_triangle;
}

inline HandleParams params_of(const Handle& h) {
  return std::visit([](const auto& v) { return v.params(); }, h);
}

inline Handle handle_from_params(HandleType type, const HandleParams& p) {
  if (type == HandleType::cuboid) return Cuboid::from_params(p);
  return SphereTriangle::from_params(p);
}

/// Validates the invariants of a stored handle (finite values, non-negative
/// extents/radii, and a usable rotation pair for cuboids).
inline void validate(const Handle& h) {
  const HandleParams p = params_of(h);
  for (double v : p) require(std::isfinite(v), ErrorKind::non_finite, "handle parameter is not finite");
  if (const auto* c = std::get_if<Cuboid>(&h)) {
    require(c->half_extents.x >= 0 && c->half_extents.y >= 0 && c->half_extents.z >= 0, ErrorKind::invalid_argument,
            "cuboid half_extents must be non-negative");
    (void)rotation_from_pair(c->rotation);
  } else {
    const auto& t = std::get<SphereTriangle>(h);
    for (double r : t.radii) require(r >= 0, ErrorKind::invalid_argument, "sphere radii must be non-negative");
  }
}

// ---------------------------------------------------------------------------
// Distance kernels, templated on the scalar so Dual numbers give Jacobians.

template <class T>
struct CuboidFrame {
  Vec3<T> center;
  Vec3<T> half_extents;
  Mat3<T> rotation;
};

template <class T>
CuboidFrame<T> cuboid_frame(const std::array<T, kHandleDim>& p, bool perturb_degenerate) {
  return {{p[0], p[1], p[2]},
          {p[3], p[4], p[5]},
          detail::orthonormalize(Vec3<T>(p[6], p[7], p[8]), Vec3<T>(p[9], p[10], p[11]), perturb_degenerate)};
}

/// Signed distance: ||(|q| - l)+|| + min(max_i(|q_i| - l_i), 0) with q = R^T (p - c).
template <class T>
T cuboid_distance(const CuboidFrame<T>& f, const Vec3d& p) {
  using std::abs;
  using std::sqrt;
  const Vec3<T> q = f.rotation.transpose_times(detail::lift<T>(p) - f.center);
  const Vec3<T> a(abs(q.x) - f.half_extents.x, abs(q.y) - f.half_extents.y, abs(q.z) - f.half_extents.z);
  T outside_sq(0.0);
  for (int i = 0; i < 3; ++i)
    if (value_of(a[i]) > 0.0) outside_sq = outside_sq + a[i] * a[i];
  const T outside = value_of(outside_sq) > 0.0 ? sqrt(outside_sq) : T(0.0);
  const T largest = max_of(max_of(a.x, a.y), a.z);
  const T inside = value_of(largest) < 0.0 ? largest : T(0.0);
  return outside + inside;
}

inline double cuboid_distance(const Cuboid& cub, const Vec3d& p) {
  return cuboid_distance(cuboid_frame<double>(cub.params(), false), p);
}

/// min_i (||p - c_i|| - r_i): distance to the union of the three vertex spheres.
template <class T>
T sphere_triangle_distance(const std::array<T, kHandleDim>& params, const Vec3d& p) {
  using std::sqrt;
  T best(std::numeric_limits<double>::infinity());
  for (int i = 0; i < 3; ++i) {
    const Vec3<T> d = detail::lift<T>(p) - Vec3<T>(params[3 * i], params[3 * i + 1], params[3 * i + 2]);
    const T sq = dot(d, d);
    const T dist = (value_of(sq) > 0.0 ? sqrt(sq) : T(0.0)) - params[9 + i];
    if (i == 0 || value_of(dist) < value_of(best)) best = dist;
  }
  return best;
}

inline double sphere_triangle_distance(const SphereTriangle& tri, const Vec3d& p) {
  return sphere_triangle_distance<double>(tri.params(), p);
}

inline double handle_distance(const Handle& h, const Vec3d& p) {
  if (const auto* c = std::get_if<Cuboid>(&h)) return cuboid_distance(*c, p);
  return sphere_triangle_distance(std::get<SphereTriangle>(h), p);
}

/// Signed distance to the solid sphere-triangle (convex hull of the three
/// balls), approximated by minimizing over barycentrically interpolated balls
/// on a simplex lattice with `resolution` subdivisions per edge. The result
/// is an upper bound of the exact hull distance.
inline double sphere_triangle_hull_distance(const SphereTriangle& tri, const Vec3d& p, int resolution = 16) {
  require(resolution >= 2, ErrorKind::invalid_argument, "bary_resolution must be >= 2");
  double best = std::numeric_limits<double>::infinity();
  const double inv = 1.0 / resolution;
  for (int i = 0; i <= resolution; ++i) {
    for (int j = 0; i + j <= resolution; ++j) {
      const double w0 = i * inv, w1 = j * inv, w2 = (resolution - i - j) * inv;
      const Vec3d c = tri.centers[0] * w0 + tri.centers[1] * w1 + tri.centers[2] * w2;
      const double r = tri.radii[0] * w0 + tri.radii[1] * w1 + tri.radii[2] * w2;
      best = std::min(best, norm(p - c) - r);
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Probe grid and signatures.

struct ProbeGrid {
  std::vector<Vec3d> points;
  int resolution = 0;
  Vec3d lower{-1, -1, -1};
  Vec3d upper{1, 1, 1};

  int size() const { return static_cast<int>(points.size()); }
};

/// Regular lattice of resolution^3 points spanning [lower, upper] including
/// both endpoints; x varies slowest, z fastest.
inline ProbeGrid make_probe_grid(int resolution, const Vec3d& lower, const Vec3d& upper) {
  require(resolution >= 2, ErrorKind::invalid_argument, "probe grid resolution must be >= 2");
  ProbeGrid grid;
  grid.resolution = resolution;
  grid.lower = lower;
  grid.upper = upper;
  grid.points.reserve(static_cast<size_t>(resolution) * resolution * resolution);
  auto coord = [&](int axis, int k) {
    return lower[axis] + (upper[axis] - lower[axis]) * static_cast<double>(k) / (resolution - 1);
  };
  for (int i = 0; i < resolution; ++i)
    for (int j = 0; j < resolution; ++j)
      for (int k = 0; k < resolution; ++k) grid.points.push_back({coord(0, i), coord(1, j), coord(2, k)});
  return grid;
}

/// The 64-point 4x4x4 lattice over [-1, 1]^3.
inline const ProbeGrid& default_probe_grid() {
  static const ProbeGrid grid = make_probe_grid(4, {-1, -1, -1}, {1, 1, 1});
  return grid;
}

using DistanceSignature = Eigen::VectorXd;

template <class T>
void signature_into(HandleType type, const std::array<T, kHandleDim>& params, const ProbeGrid& grid,
                    bool perturb_degenerate, T* out) {
  if (type == HandleType::cuboid) {
    const CuboidFrame<T> frame = cuboid_frame(params, perturb_degenerate);
    for (int k = 0; k < grid.size(); ++k) out[k] = cuboid_distance(frame, grid.points[k]);
  } else {
    for (int k = 0; k < grid.size(); ++k) out[k] = sphere_triangle_distance(params, grid.points[k]);
  }
}

inline DistanceSignature distance_signature(const Handle& h, const ProbeGrid& grid = default_probe_grid()) {
  DistanceSignature sig(grid.size());
  signature_into<double>(type_of(h), params_of(h), grid, false, sig.data());
  return sig;
}

/// Signature and its Jacobian (|P| x 12) with respect to the handle
/// parameters. Degenerate rotation pairs are perturbed rather than rejected,
/// which is the behaviour wanted for decoded network outputs.
struct SignatureJacobian {
  DistanceSignature values;
  Eigen::Matrix<double, Eigen::Dynamic, kHandleDim> jacobian;
};

inline SignatureJacobian signature_with_jacobian(HandleType type, const HandleParams& params,
                                                 const ProbeGrid& grid = default_probe_grid()) {
  using D = Dual<kHandleDim>;
  std::array<D, kHandleDim> seeded;
  for (int i = 0; i < kHandleDim; ++i) seeded[i] = D::variable(params[i], i);
  std::vector<D> out(grid.size());
  signature_into<D>(type, seeded, grid, true, out.data());
  SignatureJacobian result;
  result.values.resize(grid.size());
  result.jacobian.resize(grid.size(), kHandleDim);
  for (int k = 0; k < grid.size(); ++k) {
    result.values[k] = out[k].v;
    for (int i = 0; i < kHandleDim; ++i) result.jacobian(k, i) = out[k].d[i];
  }
  return result;
}

/// D(a, b): squared Euclidean distance between the two distance signatures.
inline double signature_distance(const DistanceSignature& a, const DistanceSignature& b) {
  return (a - b).squaredNorm();
}

inline double handle_similarity(const Handle& a, const Handle& b, const ProbeGrid& grid = default_probe_grid()) {
  require(type_of(a) == type_of(b), ErrorKind::variant_mismatch, "handle_similarity requires matching handle types");
  return signature_distance(distance_signature(a, grid), distance_signature(b, grid));
}

/// Mirror image under x -> -x. For cuboids the reflected rotation is M R M,
/// which is again proper; the box itself is symmetric so this is exact.
inline Handle reflect_x(const Handle& h) {
  if (const auto* c = std::get_if<Cuboid>(&h)) {
    const Mat3d r = rotation_from_pair(c->rotation);
    auto flip = [](const Vec3d& v) { return Vec3d{-v.x, v.y, v.z}; };
    // columns of M R M are M (R e_i) with the first column negated once more.
    const Vec3d c0 = -flip(r.col[0]);
    const Vec3d c1 = flip(r.col[1]);
    return Cuboid{flip(c->center), c->half_extents, {c0, c1}};
  }
  auto t = std::get<SphereTriangle>(h);
  for (auto& c : t.centers) c.x = -c.x;
  return t;
}

}  // namespace hf
