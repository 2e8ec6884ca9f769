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
#include <gtest/gtest.h>

#include <fstream>

#include "handleforge/data/synthetic.hpp"
#include "handleforge/net/checkpoint.hpp"
#include "handleforge/net/train.hpp"
#include "support.hpp"

using namespace hf;
using namespace hf::net;

namespace {

ModelConfig small_config() {
  ModelConfig c = ModelConfig::defaults(EncoderMode::handle_set_ae, HandleType::cuboid);
  c.encoder.hidden_widths = {8, 16};
  c.encoder.code_width = 10;
  c.decoder.hidden_width = 12;
  c.decoder.max_handles = 12;
  return c;
}

Model trained_model(std::uint64_t seed) {
  std::vector<TrainingExample> data;
  for (const HandleSet& s : data::gen_synthetic_sets(6, 1)) data.push_back(make_set_example(s));
  TrainingConfig cfg;
  cfg.stage1_iters = cfg.stage2_iters = 10;
  cfg.batch_size = 3;
  cfg.seed = seed;
  Model m = train_model(small_config(), cfg, data);
  m.metadata.notes = "unit test\nsecond line";
  return m;
}

std::string read_bytes(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void expect_kind(const std::function<void()>& f, ErrorKind kind) {
  try {
    f();
    ADD_FAILURE() << "no error raised";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
  }
}

}  // namespace

TEST(Checkpoint, SaveLoadSaveIsByteIdentical) {
  hf::testing::TempDir dir("ckpt");
  const Model m = trained_model(0);
  save_checkpoint(dir / "a.ckpt", m);
  const Model back = load_checkpoint(dir / "a.ckpt");
  save_checkpoint(dir / "b.ckpt", back);
  EXPECT_EQ(read_bytes(dir / "a.ckpt"), read_bytes(dir / "b.ckpt"));
  for (const auto& [name, p] : m.params.entries()) {
    EXPECT_EQ(p.value, back.params.at(name).value) << name;
    EXPECT_EQ(p.trainable, back.params.at(name).trainable);
  }
  EXPECT_EQ(back.metadata.iterations, 20);
  EXPECT_EQ(back.metadata.notes, "unit test second line");
  EXPECT_EQ(back.config.decoder.max_handles, 12);
  // Loaded models decode identically.
  const HandleSet s = data::gen_synthetic_sets(1, 9)[0];
  EXPECT_EQ(data::handle_set_to_string(decode(m, encode(m, s))), data::handle_set_to_string(decode(back, encode(back, s))));
}

TEST(Checkpoint, OptimizerStateRoundTrips) {
  const Model m = trained_model(0);
  diff::AdamState adam;
  adam.lr = 3e-4;
  adam.step = 17;
  adam.first_moment["w"] = diff::Matrix::Constant(2, 3, 0.25);
  adam.second_moment["w"] = diff::Matrix::Constant(2, 3, 0.5);
  const std::string bytes = serialize_checkpoint(m, &adam);
  const Checkpoint c = deserialize_checkpoint(bytes);
  ASSERT_TRUE(c.optimizer.has_value());
  EXPECT_EQ(c.optimizer->lr, 3e-4);
  EXPECT_EQ(c.optimizer->step, 17);
  EXPECT_EQ(c.optimizer->second_moment.at("w"), adam.second_moment.at("w"));
  EXPECT_EQ(serialize_checkpoint(c.model, &*c.optimizer), bytes);
  EXPECT_FALSE(deserialize_checkpoint(serialize_checkpoint(m)).optimizer.has_value());
}

TEST(Checkpoint, FixedSeedTrainingIsReproducible) {
  EXPECT_EQ(serialize_checkpoint(trained_model(4)), serialize_checkpoint(trained_model(4)));
  EXPECT_NE(serialize_checkpoint(trained_model(4)), serialize_checkpoint(trained_model(5)));
}

TEST(Checkpoint, TruncationIsCorrupt) {
  const std::string bytes = serialize_checkpoint(trained_model(0));
  for (size_t cut : {size_t{0}, size_t{3}, size_t{11}, bytes.size() / 2, bytes.size() - 1})
    expect_kind([&] { deserialize_checkpoint(bytes.substr(0, cut)); }, ErrorKind::corrupt_file);
  expect_kind([&] { deserialize_checkpoint(bytes + "x"); }, ErrorKind::corrupt_file);
}

TEST(Checkpoint, BitFlipFailsChecksum) {
  std::string bytes = serialize_checkpoint(trained_model(0));
  bytes[bytes.size() - 100] ^= 0x01;
  expect_kind([&] { deserialize_checkpoint(bytes); }, ErrorKind::corrupt_file);
}

TEST(Checkpoint, VersionMismatch) {
  std::string bytes = serialize_checkpoint(trained_model(0));
  bytes[4] = 2;
  expect_kind([&] { deserialize_checkpoint(bytes); }, ErrorKind::version_mismatch);
  std::string wrong_magic = bytes;
  wrong_magic[0] = 'X';
  expect_kind([&] { deserialize_checkpoint(wrong_magic); }, ErrorKind::corrupt_file);
}

TEST(Checkpoint, LayoutMustMatchConfig) {
  Model m = trained_model(0);
  diff::ParameterStore extra;
  for (const auto& [name, p] : m.params.entries()) extra.add(name, p.value, p.trainable);
  extra.add("decoder.extra", diff::Matrix::Zero(1, 1));
  m.params = std::move(extra);
  expect_kind([&] { deserialize_checkpoint(serialize_checkpoint(m)); }, ErrorKind::corrupt_file);
}

TEST(Checkpoint, MissingFileIsIoError) {
  hf::testing::TempDir dir("ckpt_missing");
  expect_kind([&] { load_checkpoint(dir / "nope.ckpt"); }, ErrorKind::io);
}
