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

// Mapping between the decoder's tanh outputs in (-1, 1)^12 and handle
// parameters. Cuboid: center = raw[0:3], half_extents = (raw[3:6] + 1) / 2 *
// kMaxHalfExtent, rotation pair = raw[6:12]. Sphere-triangle: centers =
// raw[0:9], radii = (raw[9:12] + 1) / 2 * kMaxRadius.

#include <algorithm>
#include <array>

#include "../geometry.hpp"

namespace hf::net {

inline constexpr double kMaxHalfExtent = 1.0;
inline constexpr double kMaxRadius = 0.5;

/// Per-coordinate slope d(param)/d(raw); the codec is affine per coordinate.
inline HandleParams codec_slope(HandleType type) {
  HandleParams s;
  s.fill(1.0);
  if (type == HandleType::cuboid) {
    for (int i = 3; i < 6; ++i) s[i] = 0.5 * kMaxHalfExtent;
  } else {
    for (int i = 9; i < 12; ++i) s[i] = 0.5 * kMaxRadius;
  }
  return s;
}

inline HandleParams decode_raw(HandleType type, const HandleParams& raw) {
  HandleParams p = raw;
  if (type == HandleType::cuboid) {
    for (int i = 3; i < 6; ++i) p[i] = (raw[i] + 1.0) * 0.5 * kMaxHalfExtent;
  } else {
    for (int i = 9; i < 12; ++i) p[i] = (raw[i] + 1.0) * 0.5 * kMaxRadius;
  }
  return p;
}

struct EncodedHandle {
  HandleParams raw;
  /// True when some coordinate fell outside [-1, 1] and was clamped.
  bool clamped = false;
};

inline EncodedHandle encode_raw(HandleType type, const HandleParams& params) {
  EncodedHandle out{params, false};
  if (type == HandleType::cuboid) {
    for (int i = 3; i < 6; ++i) out.raw[i] = params[i] / (0.5 * kMaxHalfExtent) - 1.0;
  } else {
    for (int i = 9; i < 12; ++i) out.raw[i] = params[i] / (0.5 * kMaxRadius) - 1.0;
  }
  for (double& v : out.raw) {
    if (v < -1.0 || v > 1.0) {
      out.clamped = true;
      v = std::clamp(v, -1.0, 1.0);
    }
  }
  return out;
}

/// Decoded handle; degenerate rotation pairs are regularized the same way
/// the loss kernels treat them.
inline Handle decode_handle(HandleType type, const HandleParams& raw) {
  Handle h = handle_from_params(type, decode_raw(type, raw));
  if (auto* c = std::get_if<Cuboid>(&h)) c->rotation = regularize_rotation_pair(c->rotation);
  return h;
}

}  // namespace hf::net
