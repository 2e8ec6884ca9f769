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
#include <cstdio>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "../net/train.hpp"
#include "voxel.hpp"

namespace hf::eval {

struct DatasetSplit {
  std::vector<HandleSet> train;
  std::vector<HandleSet> test;
};

/// Shuffles indices with the seed and holds out the first `test_count`.
/// Both halves keep the original relative order.
inline DatasetSplit split_dataset(const std::vector<HandleSet>& sets, int test_count, std::uint64_t seed) {
  require(test_count >= 1 && test_count < static_cast<int>(sets.size()), ErrorKind::invalid_argument,
          "test_count must leave at least one training shape");
  std::vector<int> order(sets.size());
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<char> held(sets.size(), 0);
  for (int i = 0; i < test_count; ++i) held[static_cast<size_t>(order[static_cast<size_t>(i)])] = 1;
  DatasetSplit split;
  for (size_t i = 0; i < sets.size(); ++i) (held[i] ? split.test : split.train).push_back(sets[i]);
  return split;
}

/// Auto-encodes each set and averages the IoU against it.
inline double mean_reconstruction_iou(const net::Model& model, const std::vector<HandleSet>& sets,
                                      const GridSpec& spec = {}) {
  require(!sets.empty(), ErrorKind::empty_set, "no shapes to evaluate");
  std::vector<double> scores(sets.size());
  parallel_for(static_cast<int>(sets.size()), [&](int i) {
    const HandleSet pred = net::decode(model, net::encode(model, sets[static_cast<size_t>(i)]));
    scores[static_cast<size_t>(i)] = handle_set_iou(pred, sets[static_cast<size_t>(i)], spec);
  });
  return std::accumulate(scores.begin(), scores.end(), 0.0) / static_cast<double>(scores.size());
}

struct AblationVariant {
  std::string label;
  double mean_iou = 0.0;
};

struct AblationReport {
  std::vector<AblationVariant> variants;  // full, w/o similarity, w/o alternate

  double iou(const std::string& label) const {
    for (const auto& v : variants)
      if (v.label == label) return v.mean_iou;
    fail(ErrorKind::invalid_argument, "no ablation variant '" + label + "'");
  }

  std::string table() const {
    std::string out = "variant            mean IoU\n";
    for (const auto& v : variants) {
      char line[96];
      std::snprintf(line, sizeof line, "%-18s %.4f\n", v.label.c_str(), v.mean_iou);
      out += line;
    }
    return out;
  }

  /// Single line: `ablation full=<x> w/o_similarity=<y> w/o_alternate=<z>`.
  std::string machine_line() const {
    std::string out = "ablation";
    for (const auto& v : variants) {
      std::string key = v.label;
      std::replace(key.begin(), key.end(), ' ', '_');
      char buf[48];
      std::snprintf(buf, sizeof buf, "=%.6f", v.mean_iou);
      out += " " + key + buf;
    }
    return out;
  }
};

struct AblationOptions {
  int test_count = 100;
  GridSpec grid{};
  net::LogSink log{};
};

struct AblationRun {
  AblationReport report;
  std::vector<net::Model> models;  // same order as report.variants
};

/// Trains the full model, the l2-similarity variant and the joint-schedule
/// variant with identical budgets, and scores each on the held-out split.
inline AblationRun run_ablation(const std::vector<HandleSet>& sets, const net::ModelConfig& model_config,
                                const net::TrainingConfig& base, const AblationOptions& options = {}) {
  const DatasetSplit split = split_dataset(sets, options.test_count, base.seed);
  std::vector<net::TrainingExample> examples;
  for (const auto& s : split.train) examples.push_back(net::make_set_example(s));

  struct Spec {
    const char* label;
    Similarity similarity;
    bool alternate;
  };
  const Spec specs[] = {{"full", Similarity::distance_field, true},
                        {"w/o similarity", Similarity::l2_params, true},
                        {"w/o alternate", Similarity::distance_field, false}};
  AblationRun run;
  for (const auto& spec : specs) {
    net::TrainingConfig cfg = base;
    cfg.similarity = spec.similarity;
    cfg.alternate = spec.alternate;
    if (options.log) options.log(std::string("variant ") + spec.label);
    net::Model model = net::train_model(model_config, cfg, examples, options.log);
    run.report.variants.push_back({spec.label, mean_reconstruction_iou(model, split.test, options.grid)});
    run.models.push_back(std::move(model));
  }
  return run;
}

}  // namespace hf::eval
