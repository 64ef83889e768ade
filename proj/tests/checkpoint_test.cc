/*
 * Copyright 2026 The tabsel Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "tabsel/checkpoint.h"
#include "tabsel/decoder.h"
#include "tabsel/pretrain.h"
#include "tabsel/synthetic.h"

namespace tabsel {
namespace {

std::string TempPath(const std::string& name) {
  return (std::filesystem::temp_directory_path() / name).string();
}

ModelConfig SmallConfig() {
  ModelConfig c;
  c.n_d = c.n_a = 8;
  c.n_steps = 3;
  c.batch_size = 200;
  c.virtual_batch_size = 50;
  return c;
}

TEST(Checkpoint, RawRoundTripIsBitExact) {
  CheckpointData data;
  data.meta["note"] = "probe";
  Matrix a(2, 3);
  for (std::size_t i = 0; i < 6; ++i) a.values()[i] = 1.0 / (i + 3.0);
  a(1, 2) = -0.0;
  data.tensors.emplace_back("a", a);
  data.tensors.emplace_back("empty", Matrix(0, 4));
  const auto path = TempPath("tabsel_raw.ckpt");
  WriteCheckpoint(path, data);
  const CheckpointData back = ReadCheckpoint(path);
  std::remove(path.c_str());
  EXPECT_EQ(back.meta["note"], "probe");
  ASSERT_TRUE(back.Has("a"));
  EXPECT_EQ(back.Get("a"), a);
  EXPECT_TRUE(std::signbit(back.Get("a")(1, 2)));
  EXPECT_EQ(back.Get("empty").cols(), 4u);
  EXPECT_THROW(back.Get("b"), std::out_of_range);
}

TEST(Checkpoint, ModelRoundTripKeepsEverything) {
  const Dataset data = GenerateSynthetic(SynKind::kSyn2, 300, 2);
  AttentiveModel model(data.schema, SmallConfig(), 5);
  FeatureDecoder dec(model.config(), 11, 6);
  PretrainOptions opts;
  opts.max_iterations = 3;
  Pretrain(model, dec, data, opts);  // populates running statistics
  const auto path = TempPath("tabsel_model.ckpt");
  SaveModel(path, model, &dec);
  const CheckpointData raw = ReadCheckpoint(path);
  AttentiveModel loaded = ModelFromCheckpoint(raw);
  FeatureDecoder dec2 = DecoderFromCheckpoint(raw);
  std::remove(path.c_str());

  EXPECT_EQ(loaded.config().ToJson(), model.config().ToJson());
  EXPECT_EQ(loaded.schema().ToJson(), model.schema().ToJson());
  const auto p = model.parameters(), q = loaded.parameters();
  ASSERT_EQ(p.size(), q.size());
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_EQ(p[k]->value, q[k]->value) << p[k]->name;
  const auto b = model.running_stats(), c = loaded.running_stats();
  ASSERT_EQ(b.size(), c.size());
  for (std::size_t k = 0; k < b.size(); ++k) {
    EXPECT_EQ(c[k]->name, b[k]->name);
    EXPECT_TRUE(c[k]->ready) << c[k]->name;
    EXPECT_EQ(b[k]->mean, c[k]->mean);
    EXPECT_EQ(b[k]->var, c[k]->var);
  }
  const auto db = dec.running_stats(), dc = dec2.running_stats();
  ASSERT_EQ(db.size(), dc.size());
  for (std::size_t k = 0; k < db.size(); ++k) EXPECT_EQ(db[k]->mean, dc[k]->mean);
  const auto dp = dec.parameters(), dq = dec2.parameters();
  ASSERT_EQ(dp.size(), dq.size());
  for (std::size_t k = 0; k < dp.size(); ++k) EXPECT_EQ(dp[k]->value, dq[k]->value);

  const Matrix x = data.features.RowSlice(0, 50);
  const EncoderOutput o1 = model.Run(x, Mode::kInfer), o2 = loaded.Run(x, Mode::kInfer);
  EXPECT_EQ(o1.predictions, o2.predictions);
}

TEST(Checkpoint, RejectsForeignFile) {
  const auto path = TempPath("tabsel_bad.ckpt");
  std::ofstream(path) << "NOTACHECKPOINT and more bytes";
  try {
    ReadCheckpoint(path);
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("not a tabsel checkpoint"), std::string::npos);
  }
  std::remove(path.c_str());
}

TEST(Checkpoint, RejectsTruncatedFile) {
  CheckpointData data;
  data.tensors.emplace_back("a", Matrix(10, 10));
  const auto path = TempPath("tabsel_trunc.ckpt");
  WriteCheckpoint(path, data);
  std::filesystem::resize_file(path, std::filesystem::file_size(path) - 8);
  EXPECT_THROW(ReadCheckpoint(path), std::runtime_error);
  std::remove(path.c_str());
}

TEST(Checkpoint, ShapeMismatchNamesTensor) {
  const Dataset data = GenerateSynthetic(SynKind::kSyn2, 100, 2);
  AttentiveModel model(data.schema, SmallConfig(), 5);
  CheckpointData raw = ToCheckpoint(model);
  const std::string victim = raw.tensors.back().first;
  raw.tensors.back().second = Matrix(1, 1);
  try {
    ModelFromCheckpoint(raw);
    FAIL();
  } catch (const ShapeError& e) {
    EXPECT_NE(std::string(e.what()).find(victim), std::string::npos) << e.what();
  }
}

TEST(Checkpoint, MissingDecoderThrows) {
  const Dataset data = GenerateSynthetic(SynKind::kSyn2, 100, 2);
  AttentiveModel model(data.schema, SmallConfig(), 5);
  EXPECT_THROW(DecoderFromCheckpoint(ToCheckpoint(model)), std::runtime_error);
}

}  // namespace
}  // namespace tabsel
