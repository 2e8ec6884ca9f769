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

// Binary checkpoint layout, all integers and floats little-endian:
//
//   "SHND"  u32 version
//   u32 length, config text (sorted key=value lines)
//   u32 parameter count, then per parameter in name order:
//     u32 name length, name, u8 trainable, u32 rows, u32 cols, rows*cols f64 (row-major)
//   u8 has_optimizer; if set: f64 lr, beta1, beta2, epsilon, i64 step,
//     u32 count, then per entry: name, first and second moment matrices
//   u64 FNV-1a hash of every preceding byte

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>

#include "../diff/adam.hpp"
#include "model.hpp"

namespace hf::net {

inline constexpr char kCheckpointMagic[4] = {'S', 'H', 'N', 'D'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  Model model;
  std::optional<diff::AdamState> optimizer;
};

namespace detail {
static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

inline std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  template <class T>
  void pod(T v) {
    char buf[sizeof(T)];
    std::memcpy(buf, &v, sizeof(T));
    out_.append(buf, sizeof(T));
  }
  void str(const std::string& s) {
    pod(static_cast<std::uint32_t>(s.size()));
    out_ += s;
  }
  void matrix(const Matrix& m) {
    pod(static_cast<std::uint32_t>(m.rows()));
    pod(static_cast<std::uint32_t>(m.cols()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) pod(m(r, c));
  }
  std::string& bytes() { return out_; }

 private:
  std::string out_;
};

class Reader {
 public:
  Reader(const std::string& bytes, std::string origin) : in_(bytes), origin_(std::move(origin)) {}

  template <class T>
  T pod() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, in_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  std::string str() {
    const auto n = pod<std::uint32_t>();
    need(n);
    std::string s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  Matrix matrix() {
    const auto rows = pod<std::uint32_t>(), cols = pod<std::uint32_t>();
    need(static_cast<size_t>(rows) * cols * sizeof(double));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = pod<double>();
    return m;
  }
  size_t position() const { return pos_; }

 private:
  void need(size_t n) const {
    require(pos_ + n <= in_.size(), ErrorKind::corrupt_file, origin_ + ": truncated checkpoint");
  }
  const std::string& in_;
  std::string origin_;
  size_t pos_ = 0;
};

inline std::string one_line(std::string s) {
  for (auto& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}
}  // namespace detail

inline std::string serialize_checkpoint(const Model& model, const diff::AdamState* optimizer = nullptr) {
  ConfigText config;
  write_model_config(model.config, config);
  config["meta.seed"] = std::to_string(model.metadata.seed);
  config["meta.iterations"] = std::to_string(model.metadata.iterations);
  config["meta.notes"] = detail::one_line(model.metadata.notes);

  detail::Writer w;
  w.bytes().append(kCheckpointMagic, 4);
  w.pod(kCheckpointVersion);
  w.str(format_config_text(config));
  w.pod(static_cast<std::uint32_t>(model.params.entries().size()));
  for (const auto& [name, p] : model.params.entries()) {
    w.str(name);
    w.pod(static_cast<std::uint8_t>(p.trainable ? 1 : 0));
    w.matrix(p.value);
  }
  w.pod(static_cast<std::uint8_t>(optimizer ? 1 : 0));
  if (optimizer) {
    w.pod(optimizer->lr);
    w.pod(optimizer->beta1);
    w.pod(optimizer->beta2);
    w.pod(optimizer->epsilon);
    w.pod(static_cast<std::int64_t>(optimizer->step));
    w.pod(static_cast<std::uint32_t>(optimizer->first_moment.size()));
    for (const auto& [name, m] : optimizer->first_moment) {
      const auto it = optimizer->second_moment.find(name);
      require(it != optimizer->second_moment.end(), ErrorKind::invalid_argument,
              "optimizer state for '" + name + "' lacks a second moment");
      w.str(name);
      w.matrix(m);
      w.matrix(it->second);
    }
  }
  const std::uint64_t hash = detail::fnv1a(w.bytes());
  w.pod(hash);
  return std::move(w.bytes());
}

inline Checkpoint deserialize_checkpoint(const std::string& bytes, const std::string& origin = "<memory>") {
  require(bytes.size() >= 8 + sizeof(std::uint64_t), ErrorKind::corrupt_file, origin + ": truncated checkpoint");
  require(std::memcmp(bytes.data(), kCheckpointMagic, 4) == 0, ErrorKind::corrupt_file, origin + ": not a checkpoint file");
  detail::Reader r(bytes, origin);
  for (int i = 0; i < 4; ++i) r.pod<char>();
  const auto version = r.pod<std::uint32_t>();
  require(version == kCheckpointVersion, ErrorKind::version_mismatch,
          origin + ": checkpoint version " + std::to_string(version) + " is not supported (expected " +
              std::to_string(kCheckpointVersion) + ")");

  Checkpoint ckpt;
  const ConfigText config = parse_config_text(r.str());
  ckpt.model.config = read_model_config(config);
  try {
    ckpt.model.metadata.seed = std::stoull(config_value(config, "meta.seed"));
    ckpt.model.metadata.iterations = std::stol(config_value(config, "meta.iterations"));
  } catch (const std::logic_error&) {
    fail(ErrorKind::corrupt_file, origin + ": malformed training metadata");
  }
  ckpt.model.metadata.notes = config_value(config, "meta.notes");

  const auto count = r.pod<std::uint32_t>();
  for (std::uint32_t i = 0; i < count; ++i) {
    std::string name = r.str();
    const bool trainable = r.pod<std::uint8_t>() != 0;
    ckpt.model.params.add(name, r.matrix(), trainable);
  }
  if (r.pod<std::uint8_t>()) {
    diff::AdamState s;
    s.lr = r.pod<double>();
    s.beta1 = r.pod<double>();
    s.beta2 = r.pod<double>();
    s.epsilon = r.pod<double>();
    s.step = static_cast<long>(r.pod<std::int64_t>());
    const auto n = r.pod<std::uint32_t>();
    for (std::uint32_t i = 0; i < n; ++i) {
      std::string name = r.str();
      s.first_moment[name] = r.matrix();
      s.second_moment[name] = r.matrix();
    }
    ckpt.optimizer = std::move(s);
  }
  const size_t body = r.position();
  const auto stored = r.pod<std::uint64_t>();
  require(r.position() == bytes.size(), ErrorKind::corrupt_file, origin + ": trailing bytes after checkpoint");
  require(stored == detail::fnv1a(bytes.substr(0, body)), ErrorKind::corrupt_file, origin + ": checksum mismatch");

  // The parameter layout must be exactly what the config describes.
  const Model reference = make_model(ckpt.model.config, 0);
  const auto& expected = reference.params.entries();
  const auto& actual = ckpt.model.params.entries();
  require(expected.size() == actual.size(), ErrorKind::corrupt_file, origin + ": parameter set does not match config");
  for (auto e = expected.begin(), a = actual.begin(); e != expected.end(); ++e, ++a) {
    require(e->first == a->first && e->second.value.rows() == a->second.value.rows() &&
                e->second.value.cols() == a->second.value.cols() && e->second.trainable == a->second.trainable,
            ErrorKind::corrupt_file, origin + ": parameter '" + a->first + "' does not match config");
  }
  return ckpt;
}

inline void save_checkpoint(const std::filesystem::path& path, const Model& model,
                            const diff::AdamState* optimizer = nullptr) {
  const std::string bytes = serialize_checkpoint(model, optimizer);
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorKind::io, "cannot write '" + path.string() + "'");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorKind::io, "write failed for '" + path.string() + "'");
}

inline Checkpoint load_checkpoint_full(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorKind::io, "cannot open '" + path.string() + "'");
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes, path.string());
}

inline Model load_checkpoint(const std::filesystem::path& path) { return load_checkpoint_full(path).model; }

}  // namespace hf::net
