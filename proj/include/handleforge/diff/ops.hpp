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

// Differentiable primitives. Everything works on 2-D matrices; row index is
// the batch/element dimension unless stated otherwise.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "tape.hpp"

namespace hf::diff {

namespace detail {
inline Tape& tape_of(const Var& a) {
  require(a.tape() != nullptr, ErrorKind::invalid_argument, "operation on an unbound Var");
  return *a.tape();
}
inline void same_tape(const Var& a, const Var& b) {
  require(a.tape() == b.tape(), ErrorKind::invalid_argument, "operands live on different tapes");
}
inline void same_shape(const Var& a, const Var& b, const char* op) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), ErrorKind::shape_mismatch,
          std::string(op) + ": operand shapes differ (" + std::to_string(a.rows()) + "x" + std::to_string(a.cols()) +
              " vs " + std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
}
}  // namespace detail

/// a + b, where b may also be a 1 x cols row broadcast over the rows of a.
inline Var add(const Var& a, const Var& b) {
  detail::same_tape(a, b);
  Tape& t = detail::tape_of(a);
  const int ia = a.id(), ib = b.id();
  if (b.rows() == 1 && a.rows() != 1 && b.cols() == a.cols()) {
    Matrix v = a.value().rowwise() + b.value().row(0);
    return t.record(std::move(v), {ia, ib}, [ia, ib](Tape& tp, int self) {
      tp.accumulate(ia, tp.grad(self));
      tp.accumulate(ib, tp.grad(self).colwise().sum());
    }, "add");
  }
  detail::same_shape(a, b, "add");
  return t.record(a.value() + b.value(), {ia, ib}, [ia, ib](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self));
    tp.accumulate(ib, tp.grad(self));
  }, "add");
}

inline Var sub(const Var& a, const Var& b) {
  detail::same_tape(a, b);
  detail::same_shape(a, b, "sub");
  const int ia = a.id(), ib = b.id();
  return detail::tape_of(a).record(a.value() - b.value(), {ia, ib}, [ia, ib](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self));
    tp.accumulate(ib, -tp.grad(self));
  }, "sub");
}

/// Elementwise product.
inline Var mul(const Var& a, const Var& b) {
  detail::same_tape(a, b);
  detail::same_shape(a, b, "mul");
  const int ia = a.id(), ib = b.id();
  return detail::tape_of(a).record(a.value().cwiseProduct(b.value()), {ia, ib}, [ia, ib](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self).cwiseProduct(tp.value(ib)));
    tp.accumulate(ib, tp.grad(self).cwiseProduct(tp.value(ia)));
  }, "mul");
}

inline Var scale(const Var& a, double s) {
  const int ia = a.id();
  return detail::tape_of(a).record(a.value() * s, {ia}, [ia, s](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self) * s);
  }, "scale");
}

inline Var add_scalar(const Var& a, double s) {
  const int ia = a.id();
  return detail::tape_of(a).record(a.value().array() + s, {ia}, [ia](Tape& tp, int self) {
    tp.accumulate(ia, tp.grad(self));
  }, "add_scalar");
}

inline Var matmul(const Var& a, const Var& b) {
  detail::same_tape(a, b);
  require(a.cols() == b.rows(), ErrorKind::shape_mismatch, "matmul: inner dimensions differ");
  const int ia = a.id(), ib = b.id();
  return detail::tape_of(a).record(a.value() * b.value(), {ia, ib}, [ia, ib](Tape& tp, int self) {
    if (tp.requires_grad(ia)) tp.accumulate(ia, tp.grad(self) * tp.value(ib).transpose());
    if (tp.requires_grad(ib)) tp.accumulate(ib, tp.value(ia).transpose() * tp.grad(self));
  }, "matmul");
}

/// x W^T + b with x: n x in, W: out x in, b: 1 x out.
inline Var affine(const Var& x, const Var& w, const Var& b) {
  detail::same_tape(x, w);
  detail::same_tape(x, b);
  require(x.cols() == w.cols(), ErrorKind::shape_mismatch,
          "affine: input width " + std::to_string(x.cols()) + " differs from weight fan-in " + std::to_string(w.cols()));
  require(b.rows() == 1 && b.cols() == w.rows(), ErrorKind::shape_mismatch, "affine: bias shape mismatch");
  const int ix = x.id(), iw = w.id(), ib = b.id();
  Matrix v = x.value() * w.value().transpose();
  v.rowwise() += b.value().row(0);
  return detail::tape_of(x).record(std::move(v), {ix, iw, ib}, [ix, iw, ib](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    if (tp.requires_grad(ix)) tp.accumulate(ix, g * tp.value(iw));
    if (tp.requires_grad(iw)) tp.accumulate(iw, g.transpose() * tp.value(ix));
    if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
  }, "affine");
}

inline Var relu(const Var& x) {
  const int ix = x.id();
  return detail::tape_of(x).record(x.value().cwiseMax(0.0), {ix}, [ix](Tape& tp, int self) {
    tp.accumulate(ix, (tp.value(ix).array() > 0.0).select(tp.grad(self), 0.0));
  }, "relu");
}

inline Var tanh(const Var& x) {
  const int ix = x.id();
  Matrix v = x.value().array().tanh();
  return detail::tape_of(x).record(std::move(v), {ix}, [ix](Tape& tp, int self) {
    const auto y = tp.value(self).array();
    tp.accumulate(ix, (tp.grad(self).array() * (1.0 - y * y)).matrix());
  }, "tanh");
}

inline Var sigmoid(const Var& x) {
  const int ix = x.id();
  Matrix v = (1.0 / (1.0 + (-x.value().array()).exp())).matrix();
  return detail::tape_of(x).record(std::move(v), {ix}, [ix](Tape& tp, int self) {
    const auto y = tp.value(self).array();
    tp.accumulate(ix, (tp.grad(self).array() * y * (1.0 - y)).matrix());
  }, "sigmoid");
}

inline Var square(const Var& x) {
  const int ix = x.id();
  return detail::tape_of(x).record(x.value().array().square().matrix(), {ix}, [ix](Tape& tp, int self) {
    tp.accumulate(ix, (2.0 * tp.grad(self).array() * tp.value(ix).array()).matrix());
  }, "square");
}

/// Elementwise sqrt; inputs must be non-negative. The derivative at 0 is
/// taken as 0.
inline Var sqrt(const Var& x) {
  require((x.value().array() >= 0.0).all(), ErrorKind::non_finite, "sqrt: negative input");
  const int ix = x.id();
  return detail::tape_of(x).record(x.value().array().sqrt().matrix(), {ix}, [ix](Tape& tp, int self) {
    const auto y = tp.value(self).array();
    tp.accumulate(ix, (y > 0.0).select(tp.grad(self).array() / (2.0 * y), 0.0).matrix());
  }, "sqrt");
}

inline Var sum(const Var& x) {
  const int ix = x.id();
  Matrix v(1, 1);
  v(0, 0) = x.value().sum();
  return detail::tape_of(x).record(std::move(v), {ix}, [ix](Tape& tp, int self) {
    const Matrix& xv = tp.value(ix);
    tp.accumulate(ix, Matrix::Constant(xv.rows(), xv.cols(), tp.grad(self)(0, 0)));
  }, "sum");
}

inline Var mean(const Var& x) { return scale(sum(x), 1.0 / static_cast<double>(x.value().size())); }

/// Column sums: n x c -> 1 x c.
inline Var sum_rows(const Var& x) {
  const int ix = x.id();
  return detail::tape_of(x).record(x.value().colwise().sum(), {ix}, [ix](Tape& tp, int self) {
    const Eigen::Index n = tp.value(ix).rows();
    tp.accumulate(ix, tp.grad(self).replicate(n, 1));
  }, "sum_rows");
}

namespace detail {
template <bool TakeMax>
Var row_extreme(const Var& x, const char* op) {
  const Matrix& v = x.value();
  require(v.cols() >= 1, ErrorKind::shape_mismatch, std::string(op) + ": empty rows");
  Matrix out(v.rows(), 1);
  std::vector<Eigen::Index> pick(v.rows());
  for (Eigen::Index r = 0; r < v.rows(); ++r) {
    Eigen::Index best = 0;
    for (Eigen::Index c = 1; c < v.cols(); ++c)
      if (TakeMax ? v(r, c) > v(r, best) : v(r, c) < v(r, best)) best = c;
    pick[r] = best;
    out(r, 0) = v(r, best);
  }
  const int ix = x.id();
  return tape_of(x).record(std::move(out), {ix}, [ix, pick](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix gx = Matrix::Zero(tp.value(ix).rows(), tp.value(ix).cols());
    for (size_t r = 0; r < pick.size(); ++r) gx(static_cast<Eigen::Index>(r), pick[r]) = g(static_cast<Eigen::Index>(r), 0);
    tp.accumulate(ix, gx);
  }, op);
}
}  // namespace detail

/// Per-row minimum (n x c -> n x 1); gradient goes to the first minimizer.
inline Var row_min(const Var& x) { return detail::row_extreme<false>(x, "row_min"); }
/// Per-row maximum (n x c -> n x 1); gradient goes to the first maximizer.
inline Var row_max(const Var& x) { return detail::row_extreme<true>(x, "row_max"); }

/// Row-major reshape (a K*D row becomes a K x D block, and back).
inline Var reshape(const Var& x, Eigen::Index rows, Eigen::Index cols) {
  require(rows * cols == x.value().size(), ErrorKind::shape_mismatch, "reshape: element count differs");
  using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  const RowMajor src = x.value();
  Matrix v = Eigen::Map<const RowMajor>(src.data(), rows, cols);
  const int ix = x.id();
  const Eigen::Index r0 = x.rows(), c0 = x.cols();
  return detail::tape_of(x).record(std::move(v), {ix}, [ix, r0, c0](Tape& tp, int self) {
    const RowMajor g = tp.grad(self);
    tp.accumulate(ix, Matrix(Eigen::Map<const RowMajor>(g.data(), r0, c0)));
  }, "reshape");
}

/// Max over groups of rows. offsets has groups+1 entries; group g spans rows
/// [offsets[g], offsets[g+1]). Gradient is routed to the first argmax row of
/// each column.
inline Var set_max_pool(const Var& x, const std::vector<int>& offsets) {
  const Matrix& v = x.value();
  require(offsets.size() >= 2 && offsets.front() == 0 && offsets.back() == v.rows(), ErrorKind::shape_mismatch,
          "set_max_pool: offsets do not cover the input rows");
  const int groups = static_cast<int>(offsets.size()) - 1;
  Matrix out(groups, v.cols());
  std::vector<int> arg(static_cast<size_t>(groups) * v.cols());
  for (int g = 0; g < groups; ++g) {
    require(offsets[g + 1] > offsets[g], ErrorKind::empty_set, "set_max_pool: empty group");
    for (Eigen::Index c = 0; c < v.cols(); ++c) {
      int best = offsets[g];
      for (int r = offsets[g] + 1; r < offsets[g + 1]; ++r)
        if (v(r, c) > v(best, c)) best = r;
      out(g, c) = v(best, c);
      arg[static_cast<size_t>(g) * v.cols() + c] = best;
    }
  }
  const int ix = x.id();
  const Eigen::Index cols = v.cols();
  return detail::tape_of(x).record(std::move(out), {ix}, [ix, arg, groups, cols](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix gx = Matrix::Zero(tp.value(ix).rows(), cols);
    for (int grp = 0; grp < groups; ++grp)
      for (Eigen::Index c = 0; c < cols; ++c) gx(arg[static_cast<size_t>(grp) * cols + c], c) += g(grp, c);
    tp.accumulate(ix, gx);
  }, "set_max_pool");
}

/// Reorders every column of `values` by ascending `keys` of the same
/// column (stable, so ties keep the lower index first). Keys are not
/// differentiated; the permutation is a constant in the backward pass.
inline Var sort_by_key_frozen(const Var& values, const Matrix& keys) {
  const Matrix& v = values.value();
  require(keys.rows() == v.rows() && keys.cols() == v.cols(), ErrorKind::shape_mismatch,
          "sort_by_key_frozen: keys shape differs from values");
  Matrix out(v.rows(), v.cols());
  std::vector<std::vector<int>> perm(v.cols(), std::vector<int>(v.rows()));
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    auto& p = perm[c];
    std::iota(p.begin(), p.end(), 0);
    std::stable_sort(p.begin(), p.end(), [&](int a, int b) { return keys(a, c) < keys(b, c); });
    for (Eigen::Index r = 0; r < v.rows(); ++r) out(r, c) = v(p[r], c);
  }
  const int ix = values.id();
  return detail::tape_of(values).record(std::move(out), {ix}, [ix, perm](Tape& tp, int self) {
    const Matrix& g = tp.grad(self);
    Matrix gx(g.rows(), g.cols());
    for (Eigen::Index c = 0; c < g.cols(); ++c)
      for (Eigen::Index r = 0; r < g.rows(); ++r) gx(perm[c][r], c) = g(r, c);
    tp.accumulate(ix, gx);
  }, "sort_by_key_frozen");
}

/// Exclusive cumulative product down each column: out(i) = prod_{j<i} x(j).
inline Var exclusive_cumprod(const Var& x) {
  const Matrix& v = x.value();
  Matrix out(v.rows(), v.cols());
  for (Eigen::Index c = 0; c < v.cols(); ++c) {
    double running = 1.0;
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      out(r, c) = running;
      running *= v(r, c);
    }
  }
  const int ix = x.id();
  return detail::tape_of(x).record(std::move(out), {ix}, [ix](Tape& tp, int self) {
    const Matrix& xv = tp.value(ix);
    const Matrix& g = tp.grad(self);
    Matrix gx = Matrix::Zero(xv.rows(), xv.cols());
    // d out(i) / d x(j) = prod_{m<i, m!=j} x(m) for j < i.
    for (Eigen::Index c = 0; c < xv.cols(); ++c)
      for (Eigen::Index i = 1; i < xv.rows(); ++i)
        for (Eigen::Index j = 0; j < i; ++j) {
          double p = 1.0;
          for (Eigen::Index m = 0; m < i; ++m)
            if (m != j) p *= xv(m, c);
          gx(j, c) += g(i, c) * p;
        }
    tp.accumulate(ix, gx);
  }, "exclusive_cumprod");
}

enum class BatchNormMode { train, inference };

struct BatchNormOptions {
  double momentum = 0.9;
  double epsilon = 1e-5;
};

/// Normalizes each column over the rows. In train mode the batch statistics
/// are used and blended into the running buffers as
/// running = momentum * running + (1 - momentum) * batch (biased variance);
/// inference mode uses the running buffers unchanged.
inline Var batch_norm(const Var& x, const Var& gamma, const Var& beta, Matrix& running_mean, Matrix& running_var,
                      BatchNormMode mode, const BatchNormOptions& opt = {}) {
  detail::same_tape(x, gamma);
  detail::same_tape(x, beta);
  const Matrix& v = x.value();
  const Eigen::Index n = v.rows(), c = v.cols();
  require(gamma.rows() == 1 && gamma.cols() == c && beta.rows() == 1 && beta.cols() == c, ErrorKind::shape_mismatch,
          "batch_norm: gamma/beta must be 1 x features");
  require(running_mean.rows() == 1 && running_mean.cols() == c && running_var.rows() == 1 && running_var.cols() == c,
          ErrorKind::shape_mismatch, "batch_norm: running statistics shape mismatch");
  Eigen::RowVectorXd mu, var;
  if (mode == BatchNormMode::train) {
    mu = v.colwise().mean();
    var = (v.rowwise() - mu).array().square().colwise().mean();
    running_mean = opt.momentum * running_mean + (1.0 - opt.momentum) * Matrix(mu);
    running_var = opt.momentum * running_var + (1.0 - opt.momentum) * Matrix(var);
  } else {
    mu = running_mean.row(0);
    var = running_var.row(0);
  }
  const Eigen::RowVectorXd inv_std = (var.array() + opt.epsilon).rsqrt();
  Matrix xhat = (v.rowwise() - mu).array().rowwise() * inv_std.array();
  Matrix out = (xhat.array().rowwise() * gamma.value().row(0).array()).rowwise() + beta.value().row(0).array();
  const int ix = x.id(), ig = gamma.id(), ib = beta.id();
  const bool batch_stats = mode == BatchNormMode::train;
  return detail::tape_of(x).record(
      std::move(out), {ix, ig, ib},
      [ix, ig, ib, xhat = std::move(xhat), inv_std, batch_stats, n](Tape& tp, int self) {
        const Matrix& g = tp.grad(self);
        if (tp.requires_grad(ig)) tp.accumulate(ig, g.cwiseProduct(xhat).colwise().sum());
        if (tp.requires_grad(ib)) tp.accumulate(ib, g.colwise().sum());
        if (!tp.requires_grad(ix)) return;
        const Eigen::RowVectorXd gam = tp.value(ig).row(0);
        const Matrix gxhat = g.array().rowwise() * gam.array();
        if (!batch_stats) {
          tp.accumulate(ix, Matrix(gxhat.array().rowwise() * inv_std.array()));
          return;
        }
        const Eigen::RowVectorXd mean_g = gxhat.colwise().mean();
        const Eigen::RowVectorXd mean_gx = gxhat.cwiseProduct(xhat).colwise().mean();
        Matrix gx = gxhat.rowwise() - mean_g;
        gx -= Matrix(xhat.array().rowwise() * mean_gx.array());
        gx = gx.array().rowwise() * inv_std.array();
        (void)n;
        tp.accumulate(ix, gx);
      },
      "batch_norm");
}

}  // namespace hf::diff
