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

// Latent-space applications on a trained model: interpolation between codes,
// completion of partial handle sets, and propagation of user edits. The last
// two run Adam on z through the frozen decoder.

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <optional>
#include <random>
#include <sstream>
#include <vector>

#include "../data/io.hpp"
#include "../diff/ops.hpp"
#include "../net/losses.hpp"
#include "../net/model.hpp"

namespace hf::apps {

using net::LatentCode;
using net::Model;

struct OptimizationConfig {
  int steps = 500;
  double lr = 1e-2;
  int restarts = 8;
  double gamma = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    require(steps >= 1, ErrorKind::invalid_argument, "steps must be >= 1");
    require(restarts >= 1, ErrorKind::invalid_argument, "restarts must be >= 1");
    require(gamma >= 0.0 && std::isfinite(gamma), ErrorKind::invalid_argument, "gamma must be >= 0");
    require(lr > 0.0, ErrorKind::invalid_argument, "lr must be positive");
  }
};

struct InterpolationFrame {
  double alpha = 0.0;
  LatentCode z;
  HandleSet handles;  // raw existence retained; threshold for display
};

/// Decodes alpha * z1 + (1 - alpha) * z2 for alpha from 1 down to 0 in
/// `steps` uniform stops, so the first frame is decode(z1) and the last decode(z2).
inline std::vector<InterpolationFrame> interpolate(const Model& model, const LatentCode& z1, const LatentCode& z2,
                                                   int steps) {
  require(steps >= 2, ErrorKind::invalid_argument, "interpolation needs at least 2 steps");
  require(z1.size() == z2.size(), ErrorKind::width_mismatch, "interpolation endpoints have different widths");
  std::vector<InterpolationFrame> frames;
  for (int i = 0; i < steps; ++i) {
    const double alpha = 1.0 - static_cast<double>(i) / (steps - 1);
    LatentCode z{alpha * z1.values + (1.0 - alpha) * z2.values};
    HandleSet set = net::decode(model, z);
    frames.push_back({alpha, std::move(z), std::move(set)});
  }
  return frames;
}

/// Result of one latent optimization. `z` is the best iterate found, so the
/// returned objective never exceeds the objective at the starting point.
struct LatentResult {
  LatentCode z;
  HandleSet handles;
  double objective = 0.0;
  double coverage = 0.0;
  std::vector<double> trace;  // objective before each step
};

enum class Penalty { expected_count, deviation };

namespace detail {
struct Objective {
  double value = 0.0;
  double coverage = 0.0;
  Eigen::RowVectorXd grad;
};

// C(z, target) + gamma * (sum of existence | ||z - anchor||), with gradient.
inline Objective evaluate(const Model& model, const Eigen::RowVectorXd& z, const PreparedTarget& target,
                          double gamma, Penalty penalty, const Eigen::RowVectorXd* anchor) {
  diff::Tape tape;
  net::GraphBuilder g(tape, model);
  diff::Var zv = tape.leaf(z);
  diff::Var raw = g.decode_params(zv);
  diff::Var e = g.decode_existence(zv);
  net::SetLossStats stats;
  diff::Var obj = net::set_loss(raw, e, model.config.handle_type, {&target}, LossTerms::coverage, {}, &stats);
  if (gamma > 0.0) {
    diff::Var term = penalty == Penalty::expected_count
                         ? diff::sum(e)
                         : diff::sqrt(diff::add_scalar(
                               diff::sum(diff::square(diff::sub(zv, tape.constant(*anchor)))), 1e-12));
    obj = diff::add(obj, diff::scale(term, gamma));
  }
  tape.backward(obj);
  Objective out;
  out.value = obj.value()(0, 0);
  out.coverage = stats.coverage;
  out.grad = zv.grad().size() ? Eigen::RowVectorXd(zv.grad().row(0)) : Eigen::RowVectorXd::Zero(z.size());
  return out;
}
}  // namespace detail

/// Adam on z from `start`. Throws a non-finite error when the objective or
/// the iterate diverges.
/// A target carrying existence values contributes only its visible handles
/// (existence >= 0.5).
inline LatentResult optimize_latent(const Model& model, const LatentCode& start, const HandleSet& target_in, double gamma,
                                    Penalty penalty, const OptimizationConfig& cfg,
                                    const LatentCode* anchor = nullptr) {
  cfg.validate();
  require(start.size() == model.config.encoder.code_width, ErrorKind::width_mismatch,
          "latent width " + std::to_string(start.size()) + " but model expects " +
              std::to_string(model.config.encoder.code_width));
  require(penalty != Penalty::deviation || anchor, ErrorKind::invalid_argument, "deviation penalty needs an anchor");
  const HandleSet target = target_in.existence ? target_in.thresholded() : target_in;
  require(target.type == model.config.handle_type, ErrorKind::variant_mismatch, "target handle type differs from model");
  target.validate();
  const PreparedTarget prepared = prepare_target(target);
  const Eigen::RowVectorXd anchor_row = anchor ? Eigen::RowVectorXd(anchor->values.transpose()) : Eigen::RowVectorXd();

  Eigen::RowVectorXd z = start.values.transpose();
  Eigen::RowVectorXd m = Eigen::RowVectorXd::Zero(z.size()), v = m;
  const double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  LatentResult best;
  best.objective = std::numeric_limits<double>::infinity();
  for (int step = 0; step <= cfg.steps; ++step) {
    const detail::Objective o = detail::evaluate(model, z, prepared, gamma, penalty, anchor ? &anchor_row : nullptr);
    require(std::isfinite(o.value) && o.grad.allFinite(), ErrorKind::non_finite,
            "latent optimization diverged at step " + std::to_string(step));
    if (o.value < best.objective) {
      best.objective = o.value;
      best.coverage = o.coverage;
      best.z.values = z.transpose();
    }
    if (step == cfg.steps) break;
    best.trace.push_back(o.value);
    m = b1 * m + (1 - b1) * o.grad;
    v = b2 * v + (1 - b2) * o.grad.cwiseProduct(o.grad);
    const double bc1 = 1 - std::pow(b1, step + 1), bc2 = 1 - std::pow(b2, step + 1);
    z.array() -= cfg.lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
  }
  best.handles = net::decode(model, best.z);
  return best;
}

struct CompletionProposal {
  LatentResult result;
  int restart = 0;
};

/// Standard-normal starting codes for each restart of `complete`.
inline LatentCode completion_start(const Model& model, std::uint64_t seed, int restart) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(restart)};
  std::mt19937_64 rng(seq);
  std::normal_distribution<double> n(0.0, 1.0);
  LatentCode z{Eigen::VectorXd(model.config.encoder.code_width)};
  for (Eigen::Index i = 0; i < z.size(); ++i) z.values[i] = n(rng);
  return z;
}

/// Completes a partial set by minimizing C(z, A) + gamma * sum(g_e(z)) from
/// several starting codes. Restart 0 starts from `initial`, or from the
/// encoding of A when the model encodes handle sets; the others start from
/// standard-normal codes. Proposals come back sorted by objective (best
/// first); restarts that diverge are dropped.
inline std::vector<CompletionProposal> complete(const Model& model, const HandleSet& partial,
                                                const OptimizationConfig& cfg = {},
                                                std::optional<LatentCode> initial = std::nullopt) {
  cfg.validate();
  require(!partial.empty(), ErrorKind::empty_set, "partial handle set is empty");
  require(partial.type == model.config.handle_type, ErrorKind::variant_mismatch, "partial handle type differs from model");
  if (!initial && model.config.encoder.mode != net::EncoderMode::point_cloud_parse) {
    const HandleSet visible = partial.existence ? partial.thresholded() : partial;
    if (!visible.empty()) initial = net::encode(model, visible);
  }
  std::vector<std::optional<CompletionProposal>> slots(static_cast<size_t>(cfg.restarts));
  parallel_for(cfg.restarts, [&](int r) {
    const LatentCode start = (r == 0 && initial) ? *initial : completion_start(model, cfg.seed, r);
    try {
      slots[static_cast<size_t>(r)] =
          CompletionProposal{optimize_latent(model, start, partial, cfg.gamma, Penalty::expected_count, cfg), r};
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::non_finite) throw;
    }
  });
  std::vector<CompletionProposal> out;
  for (auto& s : slots)
    if (s) out.push_back(std::move(*s));
  require(!out.empty(), ErrorKind::non_finite, "every completion restart diverged");
  std::stable_sort(out.begin(), out.end(), [](const CompletionProposal& a, const CompletionProposal& b) {
    return a.result.objective < b.result.objective;
  });
  return out;
}

/// Fits the edited set A' while staying close to z_A: minimizes
/// C(z, A') + gamma * ||z - z_A|| starting at z_A.
inline LatentResult edit(const Model& model, const LatentCode& z_a, const HandleSet& edited,
                         const OptimizationConfig& cfg = {}) {
  require(z_a.values.allFinite(), ErrorKind::non_finite, "z_A is not finite");
  require(!edited.empty(), ErrorKind::empty_set, "edited handle set is empty");
  return optimize_latent(model, z_a, edited, cfg.gamma, Penalty::deviation, cfg, &z_a);
}

/// Expected number of handles, the sum of existence probabilities.
inline double expected_count(const HandleSet& set) {
  double s = 0.0;
  if (set.existence)
    for (double e : *set.existence) s += e;
  else
    s = set.size();
  return s;
}

/// Latent file: one number per line, 17 significant digits.
inline void save_latent(const std::filesystem::path& path, const LatentCode& z) {
  std::string out;
  for (Eigen::Index i = 0; i < z.size(); ++i) out += data::format_number(z.values[i]) + "\n";
  data::detail::write_file(path, out);
}

inline LatentCode load_latent(const std::filesystem::path& path) {
  std::stringstream in(data::detail::read_file(path));
  std::vector<double> values;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line[0] == '#') continue;
    double v = 0.0;
    try {
      size_t used = 0;
      v = std::stod(line, &used);
      require(line.find_first_not_of(" \t\r", used) == std::string::npos, ErrorKind::parse, "trailing text");
    } catch (const std::logic_error&) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": expected one number");
    } catch (const Error&) {
      fail(ErrorKind::parse, path.string() + ":" + std::to_string(line_no) + ": expected one number");
    }
    require(std::isfinite(v), ErrorKind::non_finite, path.string() + ":" + std::to_string(line_no) + ": not finite");
    values.push_back(v);
  }
  require(!values.empty(), ErrorKind::parse, path.string() + ": empty latent file");
  return {Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()))};
}

}  // namespace hf::apps
