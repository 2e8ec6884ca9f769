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

#include <cstdlib>
#include <filesystem>
#include <memory>
#include <random>
#include <string>

#include "io.hpp"
#include "sampling.hpp"

namespace hf::data {

struct AdaptiveConfig {
  int start_vertices = 10;
  int max_vertices = 40;
  int sample_count = 10000;
  double hausdorff_eps = 0.2;
  std::uint64_t seed = 0;

  void validate() const {
    require(start_vertices >= 1 && start_vertices <= max_vertices, ErrorKind::invalid_argument,
            "start_vertices must be in [1, max_vertices]");
    require(hausdorff_eps > 0.0, ErrorKind::invalid_argument, "hausdorff_eps must be positive");
    require(sample_count >= 1, ErrorKind::invalid_argument, "sample_count must be positive");
  }
};

/// Produces a sphere-mesh (as sphere-triangles) with a given vertex budget.
class Decimator {
 public:
  virtual ~Decimator() = default;
  virtual HandleSet decimate(const TriangleMesh& mesh, const std::filesystem::path& mesh_path, int budget) = 0;
};

/// Runs `<command> <mesh_path> <budget> <output_path>` and reads the handle
/// set the program writes to output_path.
class ExternalDecimator final : public Decimator {
 public:
  ExternalDecimator(std::string command, std::filesystem::path work_dir)
      : command_(std::move(command)), work_dir_(std::move(work_dir)) {}

  HandleSet decimate(const TriangleMesh&, const std::filesystem::path& mesh_path, int budget) override {
    std::filesystem::create_directories(work_dir_);
    const auto out = work_dir_ / ("sphere_mesh_" + std::to_string(budget) + ".json");
    std::filesystem::remove(out);
    const std::string cmd = command_ + " '" + mesh_path.string() + "' " + std::to_string(budget) + " '" + out.string() + "'";
    const int status = std::system(cmd.c_str());
    require(status == 0, ErrorKind::decimator,
            "budget " + std::to_string(budget) + ": decimator exited with status " + std::to_string(status));
    require(std::filesystem::exists(out), ErrorKind::decimator,
            "budget " + std::to_string(budget) + ": decimator wrote no output");
    return load_handle_set(out);
  }

 private:
  std::string command_;
  std::filesystem::path work_dir_;
};

struct AdaptiveResult {
  HandleSet set;
  int budget = 0;
  bool satisfied = false;  // false when the max-budget result is a fallback
  double hausdorff = 0.0;
};

/// Raises the vertex budget from start to max and keeps the first sphere-mesh
/// whose sampled Hausdorff distance to the mesh is below eps. Falls back to
/// the max-budget result with `satisfied = false`.
inline AdaptiveResult adaptive_cardinality(const TriangleMesh& mesh, const std::filesystem::path& mesh_path,
                                           Decimator& decimator, const AdaptiveConfig& cfg = {}) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const PointCloud reference = sample_points_on_mesh(mesh, cfg.sample_count, rng);
  AdaptiveResult result;
  for (int budget = cfg.start_vertices; budget <= cfg.max_vertices; ++budget) {
    HandleSet candidate;
    try {
      candidate = decimator.decimate(mesh, mesh_path, budget);
      require(candidate.type == HandleType::sphere_triangle, ErrorKind::variant_mismatch,
              "decimator must produce sphere_triangle handles");
      candidate.validate();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::decimator) throw;
      throw Error(ErrorKind::decimator, "budget " + std::to_string(budget) + ": " + e.what());
    }
    std::mt19937_64 sample_rng(cfg.seed + static_cast<std::uint64_t>(budget));
    const double h = hausdorff(reference, sample_points_on_handles(candidate, cfg.sample_count, sample_rng));
    result = {std::move(candidate), budget, h < cfg.hausdorff_eps, h};
    if (result.satisfied) break;
  }
  return result;
}

}  // namespace hf::data
