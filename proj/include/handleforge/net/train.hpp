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

// Training loops. The alternating schedule first trains the encoder and g_p
// on coverage alone while g_e is frozen at its "everything exists"
// initialization, then freezes encoder and g_p and trains g_e on the full
// reconstruction loss. The joint schedule trains everything on the full loss
// at once.

#include <algorithm>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "../diff/adam.hpp"
#include "losses.hpp"
#include "model.hpp"

namespace hf::net {

struct TrainingExample {
  SetInput input;
  HandleSet target;
  PreparedTarget prepared;
};

/// Auto-encoder example: the handle set is both input and target.
inline TrainingExample make_set_example(const HandleSet& target) {
  target.validate();
  return {handle_set_input(target), target, prepare_target(target)};
}

/// Parsing example: a point cloud as input, the handle set as target.
inline TrainingExample make_point_example(const std::vector<Vec3d>& points, const HandleSet& target) {
  target.validate();
  return {point_cloud_input(points), target, prepare_target(target)};
}

using LogSink = std::function<void(const std::string&)>;

struct TraceEntry {
  std::string stage;
  int iteration = 0;
  double loss = 0.0;
};

class Trainer {
 public:
  Trainer(Model& model, TrainingConfig config, std::span<const TrainingExample> data, LogSink log = {})
      : model_(model), cfg_(std::move(config)), data_(data), log_(std::move(log)), rng_(cfg_.seed) {
    cfg_.validate();
    require(!data_.empty(), ErrorKind::empty_set, "training dataset is empty");
    for (const auto& ex : data_)
      require(ex.target.type == model_.config.handle_type, ErrorKind::variant_mismatch,
              "dataset handle type differs from the model");
    order_.resize(data_.size());
    std::iota(order_.begin(), order_.end(), 0);
    cursor_ = order_.size();
  }

  /// Encoder + g_p on coverage (plus the latent regularizer for VAEs); g_e frozen.
  void stage1() {
    diff::AdamState adam;
    adam.lr = cfg_.lr;
    const PassConfig pass{true, true, false};
    auto filter = [](const std::string& n) { return starts_with(n, prefix::encoder) || starts_with(n, prefix::param_branch); };
    for (int it = 0; it < cfg_.stage1_iters; ++it) {
      const double loss = step(pass, LossTerms::coverage, cfg_.vae, filter, adam, nullptr);
      record("stage1", it, loss);
    }
  }

  /// g_e on the full reconstruction loss; encoder and g_p frozen.
  void stage2() {
    diff::AdamState adam;
    adam.lr = cfg_.lr;
    const PassConfig pass{false, false, true};
    auto filter = [](const std::string& n) { return starts_with(n, prefix::exist_branch); };
    // Frozen encoder + g_p make the latent code and raw parameters of each
    // example constant for the whole stage.
    FrozenOutputs frozen = freeze_outputs();
    for (int it = 0; it < cfg_.stage2_iters; ++it) {
      const double loss = step(pass, LossTerms::full, false, filter, adam, &frozen);
      record("stage2", it, loss);
    }
  }

  /// All parameters on the full loss for stage1 + stage2 iterations.
  void joint() {
    diff::AdamState adam;
    adam.lr = cfg_.lr;
    const PassConfig pass{true, true, true};
    const int total = cfg_.stage1_iters + cfg_.stage2_iters;
    for (int it = 0; it < total; ++it) {
      const double loss = step(pass, LossTerms::full, cfg_.vae, {}, adam, nullptr);
      record("joint", it, loss);
    }
  }

  void run() {
    if (cfg_.alternate) {
      stage1();
      stage2();
    } else {
      joint();
    }
  }

  const std::vector<TraceEntry>& trace() const { return trace_; }

 private:
  struct FrozenOutputs {
    Matrix codes;
    Matrix raw;
  };

  FrozenOutputs freeze_outputs() const {
    FrozenOutputs out;
    const int n = static_cast<int>(data_.size());
    out.codes.resize(n, model_.config.encoder.code_width);
    out.raw.resize(n, model_.config.decoder.max_handles * kHandleDim);
    // One example at a time: inference-mode batch norm makes rows independent.
    for (int i = 0; i < n; ++i) {
      Tape tape;
      GraphBuilder g(tape, static_cast<const Model&>(model_));
      Var z = g.encode({&data_[i].input});
      out.codes.row(i) = z.value().row(0);
      out.raw.row(i) = g.decode_params(z).value().row(0);
    }
    return out;
  }

  std::vector<int> next_batch() {
    std::vector<int> batch;
    batch.reserve(cfg_.batch_size);
    while (static_cast<int>(batch.size()) < cfg_.batch_size) {
      if (cursor_ >= order_.size()) {
        std::shuffle(order_.begin(), order_.end(), rng_);
        cursor_ = 0;
      }
      batch.push_back(order_[cursor_++]);
    }
    return batch;
  }

  double step(PassConfig pass, LossTerms terms, bool regularize, const diff::ParameterFilter& filter,
              diff::AdamState& adam, const FrozenOutputs* frozen) {
    const std::vector<int> batch = next_batch();
    std::vector<const PreparedTarget*> targets;
    for (int i : batch) targets.push_back(&data_[i].prepared);
    Tape tape;
    GraphBuilder g(tape, model_, pass);
    Var z, raw;
    if (frozen) {
      Matrix codes(batch.size(), frozen->codes.cols()), raws(batch.size(), frozen->raw.cols());
      for (size_t b = 0; b < batch.size(); ++b) {
        codes.row(b) = frozen->codes.row(batch[b]);
        raws.row(b) = frozen->raw.row(batch[b]);
      }
      z = tape.constant(std::move(codes));
      raw = tape.constant(std::move(raws));
    } else {
      std::vector<const SetInput*> inputs;
      for (int i : batch) inputs.push_back(&data_[i].input);
      z = g.encode(inputs);
      raw = g.decode_params(z);
    }
    Var existence = g.decode_existence(z);
    LossOptions options;
    options.similarity = cfg_.similarity;
    options.normalize = cfg_.normalize_loss;
    Var loss = set_loss(raw, existence, model_.config.handle_type, targets, terms, options);
    if (regularize && cfg_.lambda > 0.0) {
      const Matrix noise = sample_regularizer_noise(z.rows(), z.cols(), cfg_.noise_variance, rng_);
      loss = diff::add(loss, diff::scale(latent_regularizer(z, noise), cfg_.lambda));
    }
    const double value = loss.value()(0, 0);
    require(std::isfinite(value), ErrorKind::non_finite, "training loss became non-finite");
    tape.backward(loss);
    diff::adam_step(model_.params, adam, filter);
    ++model_.metadata.iterations;
    return value;
  }

  void record(const char* stage, int it, double loss) {
    trace_.push_back({stage, it, loss});
    if (log_ && cfg_.log_every > 0 && (it + 1) % cfg_.log_every == 0) {
      char line[160];
      std::snprintf(line, sizeof line, "%s iter %d loss %.6f", stage, it + 1, loss);
      log_(line);
    }
  }

  Model& model_;
  TrainingConfig cfg_;
  std::span<const TrainingExample> data_;
  LogSink log_;
  std::mt19937_64 rng_;
  std::vector<int> order_;
  size_t cursor_ = 0;
  std::vector<TraceEntry> trace_;
};

/// Builds a model for `config` and trains it with the configured schedule.
inline Model train_model(const ModelConfig& config, const TrainingConfig& training,
                         std::span<const TrainingExample> data, LogSink log = {},
                         std::vector<TraceEntry>* trace = nullptr) {
  Model model = make_model(config, training.seed);
  Trainer trainer(model, training, data, std::move(log));
  trainer.run();
  if (trace) *trace = trainer.trace();
  return model;
}

}  // namespace hf::net
