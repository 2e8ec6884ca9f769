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

#include <cmath>
#include <functional>
#include <map>
#include <string>

#include "tape.hpp"

namespace hf::diff {

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  long step = 0;
  std::map<std::string, Matrix> first_moment;
  std::map<std::string, Matrix> second_moment;
};

using ParameterFilter = std::function<bool(const std::string&)>;

/// One bias-corrected Adam update on every trainable parameter accepted by
/// `filter` (all trainable ones when empty). Gradients of all parameters are
/// zeroed afterwards, whether or not they were updated.
inline void adam_step(ParameterStore& store, AdamState& state, const ParameterFilter& filter = {}) {
  ++state.step;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (auto& [name, p] : store.entries()) {
    if (!p.trainable || (filter && !filter(name))) continue;
    Matrix& m = state.first_moment[name];
    Matrix& v = state.second_moment[name];
    if (m.size() == 0) {
      m = Matrix::Zero(p.value.rows(), p.value.cols());
      v = Matrix::Zero(p.value.rows(), p.value.cols());
    }
    m = state.beta1 * m + (1.0 - state.beta1) * p.grad;
    v = state.beta2 * v + (1.0 - state.beta2) * p.grad.cwiseProduct(p.grad);
    p.value.array() -= state.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + state.epsilon);
  }
  store.zero_grad();
}

}  // namespace hf::diff
