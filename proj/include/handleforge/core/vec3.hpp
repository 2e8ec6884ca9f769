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

#include <array>
#include <cmath>

namespace hf {

/// Minimal 3-vector over an arbitrary scalar; the geometry kernels are
/// templated on the scalar so they run on plain doubles and on Dual numbers.
template <class T>
struct Vec3 {
  T x{}, y{}, z{};

  constexpr Vec3() = default;
  constexpr Vec3(T x_, T y_, T z_) : x(x_), y(y_), z(z_) {}

  constexpr T& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
  constexpr const T& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

  friend constexpr Vec3 operator+(const Vec3& a, const Vec3& b) { return {a.x + b.x, a.y + b.y, a.z + b.z}; }
  friend constexpr Vec3 operator-(const Vec3& a, const Vec3& b) { return {a.x - b.x, a.y - b.y, a.z - b.z}; }
  friend constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }
  template <class S>
  friend constexpr Vec3 operator*(const Vec3& a, const S& s) { return {a.x * s, a.y * s, a.z * s}; }
  template <class S>
  friend constexpr Vec3 operator*(const S& s, const Vec3& a) { return {a.x * s, a.y * s, a.z * s}; }
  template <class S>
  friend constexpr Vec3 operator/(const Vec3& a, const S& s) { return {a.x / s, a.y / s, a.z / s}; }
  Vec3& operator+=(const Vec3& b) { x = x + b.x; y = y + b.y; z = z + b.z; return *this; }
  Vec3& operator-=(const Vec3& b) { x = x - b.x; y = y - b.y; z = z - b.z; return *this; }

  friend constexpr bool operator==(const Vec3& a, const Vec3& b) { return a.x == b.x && a.y == b.y && a.z == b.z; }
};

using Vec3d = Vec3<double>;

template <class T>
constexpr T dot(const Vec3<T>& a, const Vec3<T>& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

template <class T>
constexpr Vec3<T> cross(const Vec3<T>& a, const Vec3<T>& b) {
  return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

template <class T>
constexpr T squared_norm(const Vec3<T>& a) { return dot(a, a); }

template <class T>
T norm(const Vec3<T>& a) {
  using std::sqrt;
  return sqrt(dot(a, a));
}

/// Rotation matrix stored by columns.
template <class T>
struct Mat3 {
  std::array<Vec3<T>, 3> col;

  static Mat3 identity() { return {{Vec3<T>(T(1), T(0), T(0)), Vec3<T>(T(0), T(1), T(0)), Vec3<T>(T(0), T(0), T(1))}}; }

  Vec3<T> operator*(const Vec3<T>& v) const { return col[0] * v.x + col[1] * v.y + col[2] * v.z; }
  /// R^T v
  Vec3<T> transpose_times(const Vec3<T>& v) const { return {dot(col[0], v), dot(col[1], v), dot(col[2], v)}; }
  T operator()(int row, int c) const { return col[c][row]; }

  friend Mat3 operator*(const Mat3& a, const Mat3& b) { return {{a * b.col[0], a * b.col[1], a * b.col[2]}}; }
  Mat3 transpose() const {
    Mat3 t;
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) t.col[c][r] = col[r][c];
    return t;
  }
  T determinant() const { return dot(col[0], cross(col[1], col[2])); }
};

using Mat3d = Mat3<double>;

}  // namespace hf
