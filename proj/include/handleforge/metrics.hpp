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

// Set-level handle losses: asymmetric/symmetric Chamfer, the existence
// weighted accuracy and coverage terms, their sum, the latent-code
// regularizer and the plain parameter-space similarity used as a baseline.
// The *_from_distances kernels expose analytic gradients so the training
// graph can back-propagate through them.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <random>
#include <vector>

#include "core/error.hpp"
#include "geometry.hpp"

namespace hf {

struct HandleSet {
  HandleType type = HandleType::cuboid;
  std::vector<Handle> handles;
  std::optional<std::vector<double>> existence;

  int size() const { return static_cast<int>(handles.size()); }
  bool empty() const { return handles.empty(); }

  /// Checks the set invariants; `allow_empty` is for intermediate sets.
  void validate(bool allow_empty = false) const {
    require(allow_empty || !handles.empty(), ErrorKind::empty_set, "handle set is empty");
    for (const auto& h : handles) {
      require(type_of(h) == type, ErrorKind::variant_mismatch, "handle type differs from set handle_type");
      hf::validate(h);
    }
    if (existence) {
      require(existence->size() == handles.size(), ErrorKind::shape_mismatch,
              "existence length differs from handle count");
      for (double e : *existence)
        require(std::isfinite(e) && e >= 0.0 && e <= 1.0, ErrorKind::invalid_argument,
                "existence values must lie in [0, 1]");
    }
  }

  /// Handles whose existence is at least `threshold` (all handles when absent).
  HandleSet thresholded(double threshold = 0.5) const {
    HandleSet out{type, {}, std::nullopt};
    for (int i = 0; i < size(); ++i)
      if (!existence || (*existence)[i] >= threshold) out.handles.push_back(handles[i]);
    return out;
  }
};

enum class Similarity { distance_field, l2_params };

/// Pairwise distance matrix: rows index the elements of a, columns those of b.
inline Eigen::MatrixXd pairwise_distances(const HandleSet& a, const HandleSet& b, Similarity similarity,
                                          const ProbeGrid& grid = default_probe_grid()) {
  require(a.type == b.type, ErrorKind::variant_mismatch, "sets have different handle types");
  Eigen::MatrixXd dist(a.size(), b.size());
  if (similarity == Similarity::distance_field) {
    std::vector<DistanceSignature> sb;
    sb.reserve(b.handles.size());
    for (const auto& h : b.handles) sb.push_back(distance_signature(h, grid));
    for (int i = 0; i < a.size(); ++i) {
      const DistanceSignature sa = distance_signature(a.handles[i], grid);
      for (int j = 0; j < b.size(); ++j) dist(i, j) = signature_distance(sa, sb[j]);
    }
  } else {
    for (int i = 0; i < a.size(); ++i) {
      const HandleParams pa = params_of(a.handles[i]);
      for (int j = 0; j < b.size(); ++j) {
        const HandleParams pb = params_of(b.handles[j]);
        double s = 0;
        for (int k = 0; k < kHandleDim; ++k) s += (pa[k] - pb[k]) * (pa[k] - pb[k]);
        dist(i, j) = s;
      }
    }
  }
  return dist;
}

/// Squared l2 distance between raw 12-parameter descriptors.
inline double l2_param_similarity(const Handle& a, const Handle& b) {
  require(type_of(a) == type_of(b), ErrorKind::variant_mismatch, "l2_param_similarity requires matching types");
  const HandleParams pa = params_of(a), pb = params_of(b);
  double s = 0;
  for (int k = 0; k < kHandleDim; ++k) s += (pa[k] - pb[k]) * (pa[k] - pb[k]);
  return s;
}

namespace detail {
// Index of the row minimum; ties resolved toward the lower index.
inline int argmin_in_column(const Eigen::MatrixXd& dist, int col) {
  int best = 0;
  for (int i = 1; i < dist.rows(); ++i)
    if (dist(i, col) < dist(best, col)) best = i;
  return best;
}
inline int argmin_in_row(const Eigen::MatrixXd& dist, int row) {
  int best = 0;
  for (int j = 1; j < dist.cols(); ++j)
    if (dist(row, j) < dist(row, best)) best = j;
  return best;
}
}  // namespace detail

inline double asym_chamfer(const HandleSet& a, const HandleSet& b, const ProbeGrid& grid = default_probe_grid()) {
  require(!a.empty() && !b.empty(), ErrorKind::empty_set, "asym_chamfer needs non-empty sets");
  const Eigen::MatrixXd dist = pairwise_distances(a, b, Similarity::distance_field, grid);
  return dist.rowwise().minCoeff().sum() / a.size();
}

inline double sym_chamfer(const HandleSet& a, const HandleSet& b, const ProbeGrid& grid = default_probe_grid()) {
  return asym_chamfer(a, b, grid) + asym_chamfer(b, a, grid);
}

// ---------------------------------------------------------------------------
// Loss kernels over a precomputed distance matrix dist(i, s) = D(pred_i, s).

/// Accuracy: sum_i e_i * min_s dist(i, s). Gradients (optional) follow the
/// selected minimum only.
inline double accuracy_from_distances(const Eigen::MatrixXd& dist, const Eigen::VectorXd& existence,
                                      Eigen::MatrixXd* d_dist = nullptr, Eigen::VectorXd* d_existence = nullptr) {
  double total = 0.0;
  for (int i = 0; i < dist.rows(); ++i) {
    const int j = detail::argmin_in_row(dist, i);
    total += dist(i, j) * existence[i];
    if (d_dist) (*d_dist)(i, j) += existence[i];
    if (d_existence) (*d_existence)[i] += dist(i, j);
  }
  return total;
}

/// Coverage: for each target s, predicted handles are visited in
/// non-decreasing distance order and contribute dist * e * prod(1 - e_prev).
/// The sort permutation is held fixed when differentiating.
inline double coverage_from_distances(const Eigen::MatrixXd& dist, const Eigen::VectorXd& existence,
                                      Eigen::MatrixXd* d_dist = nullptr, Eigen::VectorXd* d_existence = nullptr) {
  const int k = static_cast<int>(dist.rows());
  std::vector<int> order(k);
  std::vector<double> prefix(k), suffix(k + 1);
  double total = 0.0;
  for (int s = 0; s < dist.cols(); ++s) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return dist(a, s) < dist(b, s); });
    // suffix[i] = sum over m >= i of dist_m e_m prod_{i <= j < m} (1 - e_j)
    suffix[k] = 0.0;
    for (int i = k - 1; i >= 0; --i) {
      const int idx = order[i];
      suffix[i] = dist(idx, s) * existence[idx] + (1.0 - existence[idx]) * suffix[i + 1];
    }
    total += suffix[0];
    if (!d_dist && !d_existence) continue;
    double running = 1.0;
    for (int i = 0; i < k; ++i) {
      const int idx = order[i];
      prefix[i] = running;
      if (d_dist) (*d_dist)(idx, s) += existence[idx] * running;
      if (d_existence) (*d_existence)[idx] += running * (dist(idx, s) - suffix[i + 1]);
      running *= 1.0 - existence[idx];
    }
  }
  return total;
}

struct LossBreakdown {
  double accuracy_P = 0.0;
  double coverage_C = 0.0;
  double total = 0.0;
};

struct LossOptions {
  Similarity similarity = Similarity::distance_field;
  /// Divide P by K and C by |S|. Off by default: the sums are used as-is.
  bool normalize = false;
};

namespace detail {
inline Eigen::VectorXd existence_vector(const HandleSet& pred) {
  require(pred.existence.has_value(), ErrorKind::missing_existence, "predicted set has no existence values");
  return Eigen::Map<const Eigen::VectorXd>(pred.existence->data(), static_cast<Eigen::Index>(pred.existence->size()));
}
inline void check_loss_inputs(const HandleSet& pred, const HandleSet& target) {
  require(pred.existence.has_value(), ErrorKind::missing_existence, "predicted set has no existence values");
  require(!target.empty(), ErrorKind::empty_set, "target set is empty");
  require(!pred.empty(), ErrorKind::empty_set, "predicted set is empty");
}
}  // namespace detail

inline double accuracy_P(const HandleSet& pred, const HandleSet& target, const ProbeGrid& grid = default_probe_grid(),
                         const LossOptions& options = {}) {
  detail::check_loss_inputs(pred, target);
  const double v = accuracy_from_distances(pairwise_distances(pred, target, options.similarity, grid),
                                           detail::existence_vector(pred));
  return options.normalize ? v / pred.size() : v;
}

inline double coverage_C(const HandleSet& pred, const HandleSet& target, const ProbeGrid& grid = default_probe_grid(),
                         const LossOptions& options = {}) {
  detail::check_loss_inputs(pred, target);
  const double v = coverage_from_distances(pairwise_distances(pred, target, options.similarity, grid),
                                           detail::existence_vector(pred));
  return options.normalize ? v / target.size() : v;
}

inline LossBreakdown reconstruction_loss(const HandleSet& pred, const HandleSet& target,
                                         const ProbeGrid& grid = default_probe_grid(), const LossOptions& options = {}) {
  LossBreakdown out;
  out.accuracy_P = accuracy_P(pred, target, grid, options);
  out.coverage_C = coverage_C(pred, target, grid, options);
  out.total = out.accuracy_P + out.coverage_C;
  return out;
}

// ---------------------------------------------------------------------------
// Differentiable set loss with respect to predicted handle parameters.

enum class LossTerms { coverage, accuracy, full };

/// Target handles with their signatures computed once.
struct PreparedTarget {
  HandleType type = HandleType::cuboid;
  std::vector<HandleParams> params;
  std::vector<DistanceSignature> signatures;

  int size() const { return static_cast<int>(params.size()); }
};

inline PreparedTarget prepare_target(const HandleSet& target, const ProbeGrid& grid = default_probe_grid()) {
  require(!target.empty(), ErrorKind::empty_set, "target set is empty");
  PreparedTarget out;
  out.type = target.type;
  for (const auto& h : target.handles) {
    out.params.push_back(params_of(h));
    out.signatures.push_back(distance_signature(h, grid));
  }
  return out;
}

struct SetLossGradient {
  LossBreakdown value;
  /// K x 12 gradient with respect to the predicted handle parameters.
  Eigen::Matrix<double, Eigen::Dynamic, kHandleDim> d_params;
  Eigen::VectorXd d_existence;
};

/// Evaluates the requested loss terms for K predicted handles (given as raw
/// handle parameter rows) and returns the gradient with respect to both the
/// parameters and the existence probabilities.
inline SetLossGradient set_loss_with_gradient(HandleType type, const std::vector<HandleParams>& pred,
                                              const Eigen::VectorXd& existence, const PreparedTarget& target,
                                              LossTerms terms, const LossOptions& options = {},
                                              const ProbeGrid& grid = default_probe_grid(),
                                              bool param_gradient = true) {
  require(target.type == type, ErrorKind::variant_mismatch, "target handle type differs from prediction");
  require(!pred.empty() && target.size() > 0, ErrorKind::empty_set, "set loss needs non-empty sets");
  require(static_cast<int>(pred.size()) == existence.size(), ErrorKind::shape_mismatch,
          "existence length differs from handle count");
  const int k = static_cast<int>(pred.size());
  const int s = target.size();

  Eigen::MatrixXd dist(k, s);
  std::vector<SignatureJacobian> jac;
  if (options.similarity == Similarity::distance_field) {
    jac.reserve(k);
    for (int i = 0; i < k; ++i) {
      if (param_gradient) {
        jac.push_back(signature_with_jacobian(type, pred[i], grid));
      } else {
        SignatureJacobian sj;
        sj.values.resize(grid.size());
        signature_into<double>(type, pred[i], grid, true, sj.values.data());
        jac.push_back(std::move(sj));
      }
      for (int j = 0; j < s; ++j) dist(i, j) = signature_distance(jac[i].values, target.signatures[j]);
    }
  } else {
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < s; ++j) {
        double acc = 0;
        for (int d = 0; d < kHandleDim; ++d) acc += (pred[i][d] - target.params[j][d]) * (pred[i][d] - target.params[j][d]);
        dist(i, j) = acc;
      }
  }

  SetLossGradient out;
  Eigen::MatrixXd d_dist = Eigen::MatrixXd::Zero(k, s);
  out.d_existence = Eigen::VectorXd::Zero(k);
  if (terms != LossTerms::coverage) {
    Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(k, s);
    Eigen::VectorXd de = Eigen::VectorXd::Zero(k);
    double p = accuracy_from_distances(dist, existence, &dd, &de);
    if (options.normalize) {
      p /= k;
      dd /= k;
      de /= k;
    }
    out.value.accuracy_P = p;
    d_dist += dd;
    out.d_existence += de;
  }
  if (terms != LossTerms::accuracy) {
    Eigen::MatrixXd dd = Eigen::MatrixXd::Zero(k, s);
    Eigen::VectorXd de = Eigen::VectorXd::Zero(k);
    double c = coverage_from_distances(dist, existence, &dd, &de);
    if (options.normalize) {
      c /= s;
      dd /= s;
      de /= s;
    }
    out.value.coverage_C = c;
    d_dist += dd;
    out.d_existence += de;
  }
  out.value.total = out.value.accuracy_P + out.value.coverage_C;

  out.d_params = Eigen::Matrix<double, Eigen::Dynamic, kHandleDim>::Zero(k, kHandleDim);
  if (!param_gradient) return out;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < s; ++j) {
      const double w = d_dist(i, j);
      if (w == 0.0) continue;
      if (options.similarity == Similarity::distance_field) {
        const Eigen::VectorXd diff = jac[i].values - target.signatures[j];
        out.d_params.row(i) += (2.0 * w) * (jac[i].jacobian.transpose() * diff).transpose();
      } else {
        for (int d = 0; d < kHandleDim; ++d) out.d_params(i, d) += 2.0 * w * (pred[i][d] - target.params[j][d]);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Latent regularizer: ||cov(Z + delta)||_F + ||mean(Z)||^2.

struct RegularizerValue {
  double value = 0.0;
  double covariance_norm = 0.0;
  double mean_penalty = 0.0;
  /// Gradient with respect to the codes (same shape as the batch).
  Eigen::MatrixXd d_codes;
};

/// `codes` holds one latent code per row; `noise` must match its shape (pass
/// a zero matrix for c = 0).
inline RegularizerValue vae_regularizer_with_noise(const Eigen::MatrixXd& codes, const Eigen::MatrixXd& noise) {
  const Eigen::Index n = codes.rows();
  require(n >= 2, ErrorKind::invalid_argument, "vae_regularizer needs a batch of at least 2 codes");
  require(noise.rows() == n && noise.cols() == codes.cols(), ErrorKind::shape_mismatch, "noise shape mismatch");
  const Eigen::MatrixXd noisy = codes + noise;
  const Eigen::RowVectorXd mu = noisy.colwise().mean();
  const Eigen::MatrixXd centered = noisy.rowwise() - mu;
  const Eigen::MatrixXd cov = centered.transpose() * centered / static_cast<double>(n - 1);
  RegularizerValue out;
  out.covariance_norm = cov.norm();
  const Eigen::RowVectorXd mean = codes.colwise().mean();
  out.mean_penalty = mean.squaredNorm();
  out.value = out.covariance_norm + out.mean_penalty;
  out.d_codes = Eigen::MatrixXd::Zero(n, codes.cols());
  if (out.covariance_norm > 0.0)
    out.d_codes += centered * cov * (2.0 / (static_cast<double>(n - 1) * out.covariance_norm));
  out.d_codes.rowwise() += mean * (2.0 / static_cast<double>(n));
  return out;
}

template <class Rng>
Eigen::MatrixXd sample_regularizer_noise(Eigen::Index rows, Eigen::Index cols, double variance, Rng& rng) {
  Eigen::MatrixXd noise = Eigen::MatrixXd::Zero(rows, cols);
  if (variance <= 0.0) return noise;
  std::normal_distribution<double> normal(0.0, std::sqrt(variance));
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) noise(i, j) = normal(rng);
  return noise;
}

template <class Rng>
double vae_regularizer(const Eigen::MatrixXd& codes, double noise_variance, Rng& rng) {
  return vae_regularizer_with_noise(codes, sample_regularizer_noise(codes.rows(), codes.cols(), noise_variance, rng))
      .value;
}

}  // namespace hf
