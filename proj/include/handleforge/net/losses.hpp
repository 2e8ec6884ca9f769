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

// Tape operations wrapping the set-level losses so they back-propagate into
// the decoder outputs and latent codes.

#include <vector>

#include "../core/parallel.hpp"
#include "../diff/ops.hpp"
#include "../metrics.hpp"
#include "codec.hpp"

namespace hf::net {

using diff::Matrix;
using diff::Tape;
using diff::Var;

struct SetLossStats {
  double accuracy = 0.0;
  double coverage = 0.0;
};

/// Mean over the batch of the requested loss terms between the decoded
/// prediction (raw: B x K*12, existence: B x K) and each row's target.
/// Gradients are computed per sample in parallel and reduced in batch order.
inline Var set_loss(const Var& raw, const Var& existence, HandleType type,
                    const std::vector<const PreparedTarget*>& targets, LossTerms terms,
                    const LossOptions& options = {}, SetLossStats* stats = nullptr) {
  require(raw.tape() == existence.tape(), ErrorKind::invalid_argument, "set_loss: operands on different tapes");
  const Eigen::Index batch = raw.rows();
  const Eigen::Index k = existence.cols();
  require(existence.rows() == batch && static_cast<Eigen::Index>(targets.size()) == batch, ErrorKind::shape_mismatch,
          "set_loss: batch sizes differ");
  require(raw.cols() == k * kHandleDim, ErrorKind::shape_mismatch, "set_loss: raw width must be K * 12");

  const bool need_grad = raw.requires_grad() || existence.requires_grad();
  const HandleParams slope = codec_slope(type);
  std::vector<SetLossGradient> per_sample(static_cast<size_t>(batch));
  const Matrix& raw_v = raw.value();
  const Matrix& ex_v = existence.value();
  parallel_for(static_cast<int>(batch), [&](int b) {
    std::vector<HandleParams> pred(static_cast<size_t>(k));
    for (Eigen::Index i = 0; i < k; ++i) {
      HandleParams r;
      for (int d = 0; d < kHandleDim; ++d) r[d] = raw_v(b, i * kHandleDim + d);
      pred[static_cast<size_t>(i)] = decode_raw(type, r);
    }
    per_sample[static_cast<size_t>(b)] =
        set_loss_with_gradient(type, pred, ex_v.row(b).transpose(), *targets[static_cast<size_t>(b)], terms, options,
                               default_probe_grid(), raw.requires_grad());
  });

  double total = 0.0, acc = 0.0, cov = 0.0;
  for (const auto& s : per_sample) {
    total += s.value.total;
    acc += s.value.accuracy_P;
    cov += s.value.coverage_C;
  }
  const double inv_b = 1.0 / static_cast<double>(batch);
  if (stats) *stats = {acc * inv_b, cov * inv_b};
  Matrix value(1, 1);
  value(0, 0) = total * inv_b;

  Matrix d_raw, d_ex;
  if (need_grad) {
    d_raw = Matrix::Zero(batch, k * kHandleDim);
    d_ex = Matrix::Zero(batch, k);
    for (Eigen::Index b = 0; b < batch; ++b) {
      const auto& s = per_sample[static_cast<size_t>(b)];
      for (Eigen::Index i = 0; i < k; ++i)
        for (int d = 0; d < kHandleDim; ++d) d_raw(b, i * kHandleDim + d) = s.d_params(i, d) * slope[d] * inv_b;
      d_ex.row(b) = s.d_existence.transpose() * inv_b;
    }
  }
  const int ir = raw.id(), ie = existence.id();
  return raw.tape()->record(std::move(value), {ir, ie},
                            [ir, ie, d_raw = std::move(d_raw), d_ex = std::move(d_ex)](Tape& tp, int self) {
                              const double g = tp.grad(self)(0, 0);
                              tp.accumulate(ir, d_raw * g);
                              tp.accumulate(ie, d_ex * g);
                            },
                            "set_loss");
}

/// ||cov(Z + noise)||_F + ||mean(Z)||^2 over the rows of Z.
inline Var latent_regularizer(const Var& codes, const Matrix& noise) {
  RegularizerValue r = vae_regularizer_with_noise(codes.value(), noise);
  Matrix value(1, 1);
  value(0, 0) = r.value;
  const int ic = codes.id();
  return codes.tape()->record(std::move(value), {ic},
                              [ic, d = std::move(r.d_codes)](Tape& tp, int self) {
                                tp.accumulate(ic, d * tp.grad(self)(0, 0));
                              },
                              "latent_regularizer");
}

}  // namespace hf::net
