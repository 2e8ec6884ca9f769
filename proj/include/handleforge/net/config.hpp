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

#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "../core/error.hpp"
#include "../geometry.hpp"
#include "../metrics.hpp"

namespace hf::net {

enum class EncoderMode { point_cloud_parse, handle_set_ae, handle_set_vae };

inline std::string to_string(EncoderMode m) {
  switch (m) {
    case EncoderMode::point_cloud_parse: return "parse";
    case EncoderMode::handle_set_ae: return "ae";
    case EncoderMode::handle_set_vae: return "vae";
  }
  return "ae";
}

inline EncoderMode parse_encoder_mode(const std::string& text) {
  if (text == "parse") return EncoderMode::point_cloud_parse;
  if (text == "ae") return EncoderMode::handle_set_ae;
  if (text == "vae") return EncoderMode::handle_set_vae;
  fail(ErrorKind::parse, "mode: unknown value '" + text + "'");
}

inline std::string to_string(Similarity s) { return s == Similarity::distance_field ? "field" : "l2"; }

inline Similarity parse_similarity(const std::string& text) {
  if (text == "field") return Similarity::distance_field;
  if (text == "l2") return Similarity::l2_params;
  fail(ErrorKind::parse, "similarity: unknown value '" + text + "'");
}

struct EncoderConfig {
  EncoderMode mode = EncoderMode::handle_set_ae;
  int input_width = kHandleDim;
  std::vector<int> hidden_widths{64, 128, 256};
  int code_width = 512;

  static EncoderConfig defaults(EncoderMode mode) {
    EncoderConfig c;
    c.mode = mode;
    switch (mode) {
      case EncoderMode::point_cloud_parse:
        c.input_width = 3;
        c.code_width = 1024;
        break;
      case EncoderMode::handle_set_ae:
        c.code_width = 512;
        break;
      case EncoderMode::handle_set_vae:
        c.code_width = 256;
        break;
    }
    return c;
  }
};

/// Number of points expected by the point-cloud encoder.
inline constexpr int kParsePointCount = 1024;

struct DecoderConfig {
  int max_handles = 30;
  int handle_dim = kHandleDim;
  int hidden_width = 256;
  int hidden_depth = 3;

  static DecoderConfig defaults(HandleType type) {
    DecoderConfig c;
    c.max_handles = type == HandleType::cuboid ? 30 : 50;
    return c;
  }
};

struct ModelConfig {
  HandleType handle_type = HandleType::cuboid;
  EncoderConfig encoder{};
  DecoderConfig decoder{};

  static ModelConfig defaults(EncoderMode mode, HandleType type) {
    return {type, EncoderConfig::defaults(mode), DecoderConfig::defaults(type)};
  }
};

struct TrainingConfig {
  int stage1_iters = 5000;
  int stage2_iters = 5000;
  double lr = 1e-3;
  int batch_size = 32;
  std::uint64_t seed = 0;
  double lambda = 0.1;
  double noise_variance = 0.01;
  bool vae = false;
  bool alternate = true;
  Similarity similarity = Similarity::distance_field;
  bool normalize_loss = false;
  int log_every = 100;

  void validate() const {
    require(stage1_iters > 0 && stage2_iters > 0, ErrorKind::invalid_argument, "iteration counts must be positive");
    require(batch_size >= 2, ErrorKind::invalid_argument, "batch_size must be >= 2");
    require(lambda >= 0 && noise_variance >= 0, ErrorKind::invalid_argument, "lambda and c must be >= 0");
    require(lr > 0, ErrorKind::invalid_argument, "lr must be positive");
  }
};

/// Canonical key=value text (sorted keys, one per line).
using ConfigText = std::map<std::string, std::string>;

inline std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

inline std::vector<int> split_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(std::stoi(item));
  return out;
}

inline void write_model_config(const ModelConfig& c, ConfigText& out) {
  out["handle_type"] = std::string(to_string(c.handle_type));
  out["encoder.mode"] = to_string(c.encoder.mode);
  out["encoder.input_width"] = std::to_string(c.encoder.input_width);
  out["encoder.hidden_widths"] = join_ints(c.encoder.hidden_widths);
  out["encoder.code_width"] = std::to_string(c.encoder.code_width);
  out["decoder.max_handles"] = std::to_string(c.decoder.max_handles);
  out["decoder.handle_dim"] = std::to_string(c.decoder.handle_dim);
  out["decoder.hidden_width"] = std::to_string(c.decoder.hidden_width);
  out["decoder.hidden_depth"] = std::to_string(c.decoder.hidden_depth);
}

inline const std::string& config_value(const ConfigText& text, const std::string& key) {
  auto it = text.find(key);
  require(it != text.end(), ErrorKind::corrupt_file, "config is missing key '" + key + "'");
  return it->second;
}

inline ModelConfig read_model_config(const ConfigText& t) {
  ModelConfig c;
  try {
    c.handle_type = parse_handle_type(config_value(t, "handle_type"));
    c.encoder.mode = parse_encoder_mode(config_value(t, "encoder.mode"));
    c.encoder.input_width = std::stoi(config_value(t, "encoder.input_width"));
    c.encoder.hidden_widths = split_ints(config_value(t, "encoder.hidden_widths"));
    c.encoder.code_width = std::stoi(config_value(t, "encoder.code_width"));
    c.decoder.max_handles = std::stoi(config_value(t, "decoder.max_handles"));
    c.decoder.handle_dim = std::stoi(config_value(t, "decoder.handle_dim"));
    c.decoder.hidden_width = std::stoi(config_value(t, "decoder.hidden_width"));
    c.decoder.hidden_depth = std::stoi(config_value(t, "decoder.hidden_depth"));
  } catch (const std::logic_error&) {
    fail(ErrorKind::corrupt_file, "config contains a malformed number");
  }
  require(c.decoder.handle_dim == kHandleDim, ErrorKind::corrupt_file, "decoder.handle_dim must be 12");
  return c;
}

inline std::string format_config_text(const ConfigText& t) {
  std::string out;
  for (const auto& [k, v] : t) out += k + "=" + v + "\n";
  return out;
}

inline ConfigText parse_config_text(const std::string& text) {
  ConfigText t;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    require(eq != std::string::npos, ErrorKind::corrupt_file, "config line without '=': " + line);
    t[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return t;
}

}  // namespace hf::net
