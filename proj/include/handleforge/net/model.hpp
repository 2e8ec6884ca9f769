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

// Set encoder (shared per-element MLP, max pool, affine head) and the
// two-branch decoder: g_p emits K x 12 tanh-bounded parameters, g_e emits K
// sigmoid existence probabilities. Both branches are hidden_depth layers of
// affine + batch norm + ReLU.

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "../diff/ops.hpp"
#include "../metrics.hpp"
#include "codec.hpp"
#include "config.hpp"

namespace hf::net {

using diff::Matrix;
using diff::ParameterStore;
using diff::Tape;
using diff::Var;

struct LatentCode {
  Eigen::VectorXd values;

  Eigen::Index size() const { return values.size(); }
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  long iterations = 0;
  std::string notes;
};

struct Model {
  ModelConfig config;
  ParameterStore params;
  TrainingMetadata metadata;
};

namespace prefix {
inline const std::string encoder = "encoder.";
inline const std::string param_branch = "decoder.param.";
inline const std::string exist_branch = "decoder.exist.";
}  // namespace prefix

inline bool starts_with(const std::string& s, const std::string& p) { return s.compare(0, p.size(), p) == 0; }

namespace detail {
template <class Rng>
void add_affine(ParameterStore& store, const std::string& name, int fan_in, int fan_out, Rng& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Matrix w(fan_out, fan_in);
  for (Eigen::Index i = 0; i < w.size(); ++i) w.data()[i] = u(rng);
  store.add(name + ".weight", std::move(w));
  store.add(name + ".bias", Matrix::Zero(1, fan_out));
}

inline void add_batch_norm(ParameterStore& store, const std::string& name, int width) {
  store.add(name + ".gamma", Matrix::Ones(1, width));
  store.add(name + ".beta", Matrix::Zero(1, width));
  store.add(name + ".running_mean", Matrix::Zero(1, width), false);
  store.add(name + ".running_var", Matrix::Ones(1, width), false);
}

template <class Rng>
void add_mlp_branch(ParameterStore& store, const std::string& base, int in, int width, int depth, int out, Rng& rng) {
  int fan_in = in;
  for (int l = 0; l < depth; ++l) {
    add_affine(store, base + "fc" + std::to_string(l), fan_in, width, rng);
    add_batch_norm(store, base + "fc" + std::to_string(l) + ".bn", width);
    fan_in = width;
  }
  add_affine(store, base + "head", fan_in, out, rng);
}
}  // namespace detail

/// Final g_e layer gets zero weights and bias +10, so every existence
/// probability starts at sigmoid(10) ~= 0.99995 independent of z.
inline constexpr double kExistenceInitBias = 10.0;

inline void init_existence_head(Model& model) {
  model.params.at(prefix::exist_branch + "head.weight").value.setZero();
  model.params.at(prefix::exist_branch + "head.bias").value.setConstant(kExistenceInitBias);
}

/// Allocates all parameters. Affine weights are uniform in +-1/sqrt(fan_in),
/// biases zero. `existence_init` applies init_existence_head.
inline Model make_model(const ModelConfig& config, std::uint64_t seed, bool existence_init = true) {
  require(config.decoder.handle_dim == kHandleDim, ErrorKind::invalid_argument, "handle_dim must be 12");
  require(config.decoder.max_handles >= 1, ErrorKind::invalid_argument, "max_handles must be >= 1");
  require(!config.encoder.hidden_widths.empty(), ErrorKind::invalid_argument, "encoder needs hidden layers");
  Model model;
  model.config = config;
  model.metadata.seed = seed;
  std::mt19937_64 rng(seed);
  ParameterStore& store = model.params;
  int fan_in = config.encoder.input_width;
  for (size_t l = 0; l < config.encoder.hidden_widths.size(); ++l) {
    const std::string name = prefix::encoder + "mlp" + std::to_string(l);
    detail::add_affine(store, name, fan_in, config.encoder.hidden_widths[l], rng);
    detail::add_batch_norm(store, name + ".bn", config.encoder.hidden_widths[l]);
    fan_in = config.encoder.hidden_widths[l];
  }
  detail::add_affine(store, prefix::encoder + "head", fan_in, config.encoder.code_width, rng);
  const auto& dec = config.decoder;
  detail::add_mlp_branch(store, prefix::param_branch, config.encoder.code_width, dec.hidden_width, dec.hidden_depth,
                         dec.max_handles * dec.handle_dim, rng);
  detail::add_mlp_branch(store, prefix::exist_branch, config.encoder.code_width, dec.hidden_width, dec.hidden_depth,
                         dec.max_handles, rng);
  if (existence_init) init_existence_head(model);
  return model;
}

/// Which sub-networks are trained in a pass. A trained sub-network receives
/// gradients and runs batch norm on batch statistics (updating its running
/// buffers); a frozen one is a constant evaluated with running statistics.
struct PassConfig {
  bool encoder = false;
  bool param_branch = false;
  bool exist_branch = false;
};

/// Network input: one matrix per set element batch entry (rows = elements).
using SetInput = Matrix;

inline SetInput handle_set_input(const HandleSet& set, int* clamped = nullptr) {
  require(!set.empty(), ErrorKind::empty_set, "encoder input set is empty");
  SetInput m(set.size(), kHandleDim);
  for (int i = 0; i < set.size(); ++i) {
    const EncodedHandle e = encode_raw(set.type, params_of(set.handles[i]));
    if (e.clamped && clamped) ++*clamped;
    for (int k = 0; k < kHandleDim; ++k) m(i, k) = e.raw[k];
  }
  return m;
}

inline SetInput point_cloud_input(const std::vector<Vec3d>& points) {
  require(!points.empty(), ErrorKind::empty_set, "encoder input point cloud is empty");
  SetInput m(static_cast<Eigen::Index>(points.size()), 3);
  for (size_t i = 0; i < points.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 0) = points[i].x;
    m(static_cast<Eigen::Index>(i), 1) = points[i].y;
    m(static_cast<Eigen::Index>(i), 2) = points[i].z;
  }
  return m;
}

/// Builds encoder/decoder graphs for one model on one tape.
class GraphBuilder {
 public:
  /// Inference only: everything constant, batch norm on running statistics.
  GraphBuilder(Tape& tape, const Model& model) : tape_(tape), model_(model), mutable_(nullptr) {}

  /// Training pass over the sub-networks selected in `pass`.
  GraphBuilder(Tape& tape, Model& model, PassConfig pass) : tape_(tape), model_(model), mutable_(&model), pass_(pass) {}

  /// Encodes a batch of sets into a B x code_width matrix.
  Var encode(const std::vector<const SetInput*>& inputs) {
    require(!inputs.empty(), ErrorKind::empty_set, "encode: empty batch");
    const auto& cfg = model_.config.encoder;
    std::vector<int> offsets{0};
    for (const SetInput* in : inputs) {
      require(in->rows() >= 1, ErrorKind::empty_set, "encode: empty input set");
      require(in->cols() == cfg.input_width, ErrorKind::width_mismatch,
              "encode: input width " + std::to_string(in->cols()) + " but encoder expects " +
                  std::to_string(cfg.input_width));
      offsets.push_back(offsets.back() + static_cast<int>(in->rows()));
    }
    Matrix stacked(offsets.back(), cfg.input_width);
    for (size_t b = 0; b < inputs.size(); ++b) stacked.middleRows(offsets[b], inputs[b]->rows()) = *inputs[b];
    const bool train = pass_.encoder;
    Var h = tape_.constant(std::move(stacked));
    for (size_t l = 0; l < cfg.hidden_widths.size(); ++l) {
      const std::string name = prefix::encoder + "mlp" + std::to_string(l);
      h = layer(h, name, name + ".bn", train);
    }
    Var pooled = diff::set_max_pool(h, offsets);
    return diff::affine(pooled, bind(prefix::encoder + "head.weight", train), bind(prefix::encoder + "head.bias", train));
  }

  /// Raw tanh-bounded parameters, B x (K * 12).
  Var decode_params(const Var& z) {
    check_code(z);
    return diff::tanh(branch(z, prefix::param_branch, pass_.param_branch));
  }

  /// Existence probabilities, B x K.
  Var decode_existence(const Var& z) {
    check_code(z);
    return diff::sigmoid(branch(z, prefix::exist_branch, pass_.exist_branch));
  }

 private:
  void check_code(const Var& z) const {
    require(z.cols() == model_.config.encoder.code_width, ErrorKind::width_mismatch,
            "latent width " + std::to_string(z.cols()) + " but model expects " +
                std::to_string(model_.config.encoder.code_width));
  }

  Var bind(const std::string& name, bool train) {
    if (train && mutable_) return tape_.param(mutable_->params.at(name));
    return tape_.constant_view(model_.params.at(name).value);
  }

  Var layer(const Var& x, const std::string& affine_name, const std::string& bn_name, bool train) {
    Var y = diff::affine(x, bind(affine_name + ".weight", train), bind(affine_name + ".bias", train));
    Var gamma = bind(bn_name + ".gamma", train);
    Var beta = bind(bn_name + ".beta", train);
    if (train && mutable_) {
      y = diff::batch_norm(y, gamma, beta, mutable_->params.at(bn_name + ".running_mean").value,
                           mutable_->params.at(bn_name + ".running_var").value, diff::BatchNormMode::train);
    } else {
      // Inference mode never writes the buffers; the copies keep this const.
      Matrix rm = model_.params.at(bn_name + ".running_mean").value;
      Matrix rv = model_.params.at(bn_name + ".running_var").value;
      y = diff::batch_norm(y, gamma, beta, rm, rv, diff::BatchNormMode::inference);
    }
    return diff::relu(y);
  }

  Var branch(const Var& z, const std::string& base, bool train) {
    Var h = z;
    for (int l = 0; l < model_.config.decoder.hidden_depth; ++l) {
      const std::string name = base + "fc" + std::to_string(l);
      h = layer(h, name, name + ".bn", train);
    }
    return diff::affine(h, bind(base + "head.weight", train), bind(base + "head.bias", train));
  }

  Tape& tape_;
  const Model& model_;
  Model* mutable_;
  PassConfig pass_{};
};

// ---------------------------------------------------------------------------
// Inference helpers.

inline LatentCode encode_input(const Model& model, const SetInput& input) {
  Tape tape;
  GraphBuilder g(tape, model);
  Var z = g.encode({&input});
  return {z.value().row(0).transpose()};
}

inline LatentCode encode(const Model& model, const HandleSet& set) {
  require(model.config.encoder.mode != EncoderMode::point_cloud_parse, ErrorKind::invalid_argument,
          "model encodes point clouds, not handle sets");
  require(set.type == model.config.handle_type, ErrorKind::variant_mismatch, "set handle type differs from model");
  return encode_input(model, handle_set_input(set));
}

inline LatentCode encode_points(const Model& model, const std::vector<Vec3d>& points) {
  require(model.config.encoder.mode == EncoderMode::point_cloud_parse, ErrorKind::invalid_argument,
          "model encodes handle sets, not point clouds");
  require(static_cast<int>(points.size()) == kParsePointCount, ErrorKind::invalid_argument,
          "parse mode expects exactly 1024 points");
  return encode_input(model, point_cloud_input(points));
}

/// Converts decoder outputs (one batch row) into a handle set with existence.
inline HandleSet handle_set_from_outputs(HandleType type, const Eigen::RowVectorXd& raw,
                                         const Eigen::RowVectorXd& existence) {
  const int k = static_cast<int>(existence.size());
  HandleSet set{type, {}, std::vector<double>(k)};
  for (int i = 0; i < k; ++i) {
    HandleParams r;
    for (int d = 0; d < kHandleDim; ++d) r[d] = raw[i * kHandleDim + d];
    set.handles.push_back(decode_handle(type, r));
    (*set.existence)[i] = existence[i];
  }
  return set;
}

/// Decodes z into all K handles with their existence probabilities.
inline HandleSet decode(const Model& model, const LatentCode& z) {
  Tape tape;
  GraphBuilder g(tape, model);
  Var zv = tape.constant(z.values.transpose());
  Var raw = g.decode_params(zv);
  Var e = g.decode_existence(zv);
  return handle_set_from_outputs(model.config.handle_type, raw.value().row(0), e.value().row(0));
}

}  // namespace hf::net
