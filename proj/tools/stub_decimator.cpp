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

// Stand-in for an external sphere-mesh decimator, used by the tests of the
// adaptive cardinality loop. Usage: stub_decimator <mesh.obj> <budget> <out.json>
//
// The output is one degenerate sphere-triangle per mesh vertex (a sphere of
// radius STUB_RADIUS, default 0) for the first min(budget, #vertices)
// vertices. With STUB_EXACT_AT=<n>, budgets below n produce a single sphere
// at the first vertex instead. STUB_FAIL=1 exits with status 3.

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>

#include "handleforge/data/io.hpp"

int main(int argc, char** argv) {
  if (argc != 4) {
    std::fprintf(stderr, "usage: stub_decimator <mesh.obj> <budget> <out.json>\n");
    return 2;
  }
  if (const char* f = std::getenv("STUB_FAIL"); f && std::string(f) == "1") return 3;
  try {
    const auto mesh = hf::data::load_obj(argv[1]);
    const int budget = std::atoi(argv[2]);
    const char* exact = std::getenv("STUB_EXACT_AT");
    const char* rad = std::getenv("STUB_RADIUS");
    const double radius = rad ? std::atof(rad) : 0.0;
    int n = std::min<int>(budget, static_cast<int>(mesh.vertices.size()));
    if (exact && budget < std::atoi(exact)) n = 1;
    hf::HandleSet set{hf::HandleType::sphere_triangle, {}, std::nullopt};
    for (int i = 0; i < n; ++i) {
      hf::SphereTriangle t;
      t.centers = {mesh.vertices[i], mesh.vertices[i], mesh.vertices[i]};
      t.radii = {radius, radius, radius};
      set.handles.push_back(t);
    }
    hf::data::save_handle_set(argv[3], set);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
