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
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "tape.hpp"

namespace hf::diff {

struct GradCheckOptions {
  double step = 1e-4;
  double tolerance = 1e-3;
  /// Coordinates sampled per parameter (all when the parameter is smaller).
  int samples_per_parameter = 16;
  /// Relative-error floor; gradients smaller than this in magnitude are
  /// compared absolutely.
  double scale_floor = 1e-6;
  unsigned seed = 0;
};

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::string worst_coordinate;
  int checked = 0;
  /// Coordinates skipped because the function has a kink (relu, min, sort)
  /// within one step: the one-sided differences disagree, or the central
  /// difference moves when the step is halved.
  int excluded_kinks = 0;
  bool passed = false;
};

/// Central-difference check. `f(true)` must evaluate the function and leave
/// its analytic gradient in the store's grad slots; `f(false)` only
/// evaluates. Gradients are zeroed before the analytic pass.
inline GradCheckReport grad_check(const std::function<double(bool)>& f, ParameterStore& store,
                                  const GradCheckOptions& opt = {}) {
  store.zero_grad();
  const double f0 = f(true);
  std::map<std::string, Matrix> analytic;
  for (auto& [name, p] : store.entries()) analytic[name] = p.grad;
  store.zero_grad();

  GradCheckReport report;
  std::mt19937 rng(opt.seed);
  for (auto& [name, p] : store.entries()) {
    if (!p.trainable) continue;
    std::vector<Eigen::Index> coords(static_cast<size_t>(p.value.size()));
    for (Eigen::Index i = 0; i < p.value.size(); ++i) coords[static_cast<size_t>(i)] = i;
    std::shuffle(coords.begin(), coords.end(), rng);
    if (static_cast<int>(coords.size()) > opt.samples_per_parameter) coords.resize(opt.samples_per_parameter);
    for (Eigen::Index idx : coords) {
      double& slot = p.value.data()[idx];
      const double orig = slot;
      slot = orig + opt.step;
      const double fp = f(false);
      slot = orig - opt.step;
      const double fm = f(false);
      slot = orig + 0.5 * opt.step;
      const double fph = f(false);
      slot = orig - 0.5 * opt.step;
      const double fmh = f(false);
      slot = orig;
      const double forward = (fp - f0) / opt.step;
      const double backward = (f0 - fm) / opt.step;
      const double central = (fp - fm) / (2.0 * opt.step);
      const double one_sided_scale = std::max({std::abs(forward), std::abs(backward), opt.scale_floor});
      const double half = (fph - fmh) / opt.step;
      // Smooth functions move the central difference by O(step^2) only.
      const bool unstable = std::abs(half - central) > 0.1 * opt.tolerance * std::max(std::abs(central), opt.scale_floor);
      if (std::abs(forward - backward) > 0.1 * one_sided_scale + 1e-7 || unstable) {
        ++report.excluded_kinks;
        continue;
      }
      const double a = analytic[name].data()[idx];
      const double err = std::abs(a - central) / std::max({std::abs(a), std::abs(central), opt.scale_floor});
      ++report.checked;
      if (err > report.max_relative_error) {
        report.max_relative_error = err;
        report.worst_coordinate = name + "[" + std::to_string(idx) + "]";
      }
    }
  }
  report.passed = report.max_relative_error < opt.tolerance;
  return report;
}

}  // namespace hf::diff
