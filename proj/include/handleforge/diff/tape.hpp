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

// Reverse-mode differentiation over dense matrices. Nodes are appended to a
// Tape as operations execute, so the tape order is already a topological
// order; backward() walks it in reverse.

#include <Eigen/Core>

#include <functional>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "../core/error.hpp"

namespace hf::diff {

using Matrix = Eigen::MatrixXd;

struct Parameter {
  Matrix value;
  Matrix grad;
  /// Buffers such as batch-norm running statistics are stored alongside
  /// parameters but never receive gradients or optimizer updates.
  bool trainable = true;
};

/// Named parameters with lexicographic (std::map) iteration order.
class ParameterStore {
 public:
  Parameter& add(const std::string& name, Matrix init, bool trainable = true) {
    require(!params_.count(name), ErrorKind::invalid_argument, "duplicate parameter name '" + name + "'");
    Parameter p;
    p.grad = Matrix::Zero(init.rows(), init.cols());
    p.value = std::move(init);
    p.trainable = trainable;
    return params_.emplace(name, std::move(p)).first->second;
  }

  bool contains(const std::string& name) const { return params_.count(name) != 0; }

  Parameter& at(const std::string& name) {
    auto it = params_.find(name);
    require(it != params_.end(), ErrorKind::invalid_argument, "unknown parameter '" + name + "'");
    return it->second;
  }
  const Parameter& at(const std::string& name) const {
    auto it = params_.find(name);
    require(it != params_.end(), ErrorKind::invalid_argument, "unknown parameter '" + name + "'");
    return it->second;
  }

  std::map<std::string, Parameter>& entries() { return params_; }
  const std::map<std::string, Parameter>& entries() const { return params_; }

  void zero_grad() {
    for (auto& [name, p] : params_) p.grad.setZero();
  }

  Eigen::Index scalar_count() const {
    Eigen::Index n = 0;
    for (const auto& [name, p] : params_) n += p.value.size();
    return n;
  }

 private:
  std::map<std::string, Parameter> params_;
};

class Tape;

/// Handle to a node on a tape.
class Var {
 public:
  Var() = default;
  Var(Tape* tape, int id) : tape_(tape), id_(id) {}

  const Matrix& value() const;
  /// Gradient after backward(); zero-sized if nothing flowed into this node.
  const Matrix& grad() const;
  Eigen::Index rows() const { return value().rows(); }
  Eigen::Index cols() const { return value().cols(); }
  bool requires_grad() const;
  int id() const { return id_; }
  Tape* tape() const { return tape_; }

 private:
  Tape* tape_ = nullptr;
  int id_ = -1;
};

class Tape {
 public:
  using Backward = std::function<void(Tape&, int self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Value that never receives gradient.
  Var constant(Matrix value) { return push(std::move(value), {}, nullptr, false, nullptr, "constant"); }

  /// Constant that refers to an external matrix instead of copying it; the
  /// matrix must outlive the tape and stay unchanged while it is in use.
  Var constant_view(const Matrix& value) {
    Var v = push(Matrix(), {}, nullptr, false, nullptr, "constant_view");
    nodes_.back().view = &value;
    return v;
  }

  /// Free leaf whose gradient is read back through Var::grad().
  Var leaf(Matrix value) { return push(std::move(value), {}, nullptr, true, nullptr, "leaf"); }

  /// Leaf bound to a parameter; backward() adds into parameter.grad.
  Var param(Parameter& p) {
    Var v = push(Matrix(), {}, nullptr, true, &p, "param");
    nodes_.back().view = &p.value;
    return v;
  }

  /// Records an operation. The backward callback reads this node's gradient
  /// via grad(self) and accumulates into parents with accumulate().
  Var record(Matrix value, std::vector<int> parents, Backward backward, const char* op) {
    bool needs = false;
    for (int p : parents) {
      require(p >= 0 && p < static_cast<int>(nodes_.size()), ErrorKind::invalid_argument,
              std::string(op) + ": parent is not on this tape");
      needs = needs || nodes_[p].requires_grad;
    }
    return push(std::move(value), std::move(parents), std::move(backward), needs, nullptr, op);
  }

  const Matrix& value(int id) const {
    const Node& n = nodes_[id];
    return n.view ? *n.view : n.value;
  }
  const Matrix& grad(int id) const { return nodes_[id].grad; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }

  /// Adds g into the gradient slot of node id (ignored for constants).
  template <class Derived>
  void accumulate(int id, const Eigen::MatrixBase<Derived>& g) {
    Node& n = nodes_[id];
    if (!n.requires_grad) return;
    if (n.grad.size() == 0) {
      const Matrix& v = n.view ? *n.view : n.value;
      n.grad = Matrix::Zero(v.rows(), v.cols());
    }
    n.grad += g;
  }

  /// Populates gradients of every node reachable from a scalar root.
  void backward(const Var& root) {
    require(root.tape() == this, ErrorKind::invalid_argument, "backward: root belongs to another tape");
    const Matrix& r = value(root.id());
    require(r.rows() == 1 && r.cols() == 1, ErrorKind::shape_mismatch, "backward: root must be scalar");
    for (auto& n : nodes_) n.grad.resize(0, 0);
    accumulate(root.id(), Matrix::Ones(1, 1));
    for (int id = root.id(); id >= 0; --id) {
      Node& n = nodes_[id];
      if (!n.requires_grad || n.grad.size() == 0) continue;
      for (int p : n.parents)
        require(p < id, ErrorKind::invalid_argument, "backward: graph is not acyclic");
      if (n.backward) n.backward(*this, id);
      if (n.param) n.param->grad += n.grad;
    }
  }

  int size() const { return static_cast<int>(nodes_.size()); }

 private:
  struct Node {
    Matrix value;
    const Matrix* view = nullptr;
    Matrix grad;
    std::vector<int> parents;
    Backward backward;
    bool requires_grad = false;
    Parameter* param = nullptr;
  };

  Var push(Matrix value, std::vector<int> parents, Backward backward, bool requires_grad, Parameter* param,
           const char* op) {
    require(value.allFinite(), ErrorKind::non_finite, std::string(op) + ": produced a non-finite value");
    Node n;
    n.value = std::move(value);
    n.parents = std::move(parents);
    n.backward = requires_grad ? std::move(backward) : Backward{};
    n.requires_grad = requires_grad;
    n.param = param;
    nodes_.push_back(std::move(n));
    return Var(this, static_cast<int>(nodes_.size()) - 1);
  }

  std::vector<Node> nodes_;
};

inline const Matrix& Var::value() const { return tape_->value(id_); }
inline const Matrix& Var::grad() const { return tape_->grad(id_); }
inline bool Var::requires_grad() const { return tape_->requires_grad(id_); }

}  // namespace hf::diff
