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

#include <algorithm>
#include <filesystem>
#include <random>

#include <gtest/gtest.h>

#include "tabsel/interpret.h"
#include "tabsel/ops.h"
#include "tabsel/synthetic.h"

namespace tabsel {
namespace {

namespace fs = std::filesystem;

fs::path ScratchDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("tabsel_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Matrix RandomMatrix(std::size_t r, std::size_t c, Rng& rng) {
  std::normal_distribution<Real> n(0.0, 1.0);
  Matrix m(r, c);
  for (auto& v : m.values()) v = n(rng);
  return m;
}

TEST(StepContribution, Examples) {
  EXPECT_EQ(StepContribution(Matrix::FromRows({{-1, -0.5, -3}}))(0, 0), 0.0);
  EXPECT_EQ(StepContribution(Matrix::FromRows({{1, -2, 3}}))(0, 0), 4.0);
}

TEST(StepContribution, PermutationInvariant) {
  Rng rng(1);
  const Matrix d = RandomMatrix(5, 6, rng);
  Matrix permuted = d;
  for (std::size_t b = 0; b < 5; ++b) {
    auto row = permuted.row(b);
    std::reverse(row.begin(), row.end());
    std::rotate(row.begin(), row.begin() + 2, row.end());
  }
  EXPECT_LT(MaxAbsDiff(StepContribution(d), StepContribution(permuted)), 1e-15);
}

TEST(AggregateMasks, SingleStepIsItsMask) {
  MaskTrace t;
  t.masks = {Matrix::FromRows({{0.2, 0.8, 0}, {0.5, 0.25, 0.25}})};
  t.decisions = {Matrix::FromRows({{1, 2}, {0.5, -1}})};
  EXPECT_EQ(AggregateMasks(t).aggregate, t.masks[0]);
}

TEST(AggregateMasks, ZeroWeightStepIgnored) {
  MaskTrace t;
  t.masks = {Matrix::FromRows({{0.3, 0.7}}), Matrix::FromRows({{1, 0}})};
  t.decisions = {Matrix::FromRows({{1}}), Matrix::FromRows({{-4}})};
  EXPECT_EQ(AggregateMasks(t).aggregate, t.masks[0]);
}

TEST(AggregateMasks, EqualWeightsAverage) {
  MaskTrace t;
  t.masks = {Matrix::FromRows({{1, 0}}), Matrix::FromRows({{0, 1}})};
  t.decisions = {Matrix::FromRows({{1}}), Matrix::FromRows({{1}})};
  const AggregateMask agg = AggregateMasks(t);
  EXPECT_EQ(agg.aggregate, Matrix::FromRows({{0.5, 0.5}}));
  EXPECT_EQ(agg.weights, Matrix::FromRows({{1, 1}}));
}

TEST(AggregateMasks, AllZeroRowIsFlaggedUniform) {
  MaskTrace t;
  t.masks = {Matrix::FromRows({{0.5, 0.5, 0, 0}, {1, 0, 0, 0}})};
  t.decisions = {Matrix::FromRows({{1}, {-1}})};
  const AggregateMask agg = AggregateMasks(t);
  EXPECT_FALSE(agg.flagged[0]);
  EXPECT_TRUE(agg.flagged[1]);
  for (std::size_t j = 0; j < 4; ++j) EXPECT_EQ(agg.aggregate(1, j), 0.25);
}

TEST(AggregateMasks, RowsAreDistributions) {
  Rng rng(2);
  MaskTrace t;
  for (int i = 0; i < 3; ++i) {
    t.masks.push_back(SparsemaxForward(RandomMatrix(20, 6, rng)));
    t.decisions.push_back(RandomMatrix(20, 4, rng));
  }
  const AggregateMask agg = AggregateMasks(t);
  for (std::size_t b = 0; b < 20; ++b) {
    Real s = 0;
    for (Real v : agg.aggregate.row(b)) {
      EXPECT_GE(v, 0.0);
      s += v;
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
  }
}

TEST(MeanMaskEntropy, UniformMasks) {
  MaskTrace t;
  t.masks = {Matrix(3, 4, 0.25)};
  EXPECT_NEAR(MeanMaskEntropy(t), std::log(4.0), 1e-12);
}

TEST(Export, MatrixRoundTripKeepsHeader) {
  Rng rng(3);
  const Matrix m = RandomMatrix(4, 3, rng);
  const std::vector<std::string> names{"odor", "x2", "cap-color"};
  const fs::path path = ScratchDir("matrix") / "m.csv";
  WriteMatrix(path.string(), m, names);
  std::vector<std::string> header;
  EXPECT_EQ(ReadMatrix(path.string(), &header), m);
  EXPECT_EQ(header, names);
}

TEST(Export, NonFiniteValuesRefused) {
  const fs::path path = ScratchDir("nonfinite") / "m.csv";
  EXPECT_THROW(WriteMatrix(path.string(), Matrix(1, 1, std::nan("")), {"a"}), NonFiniteError);
}

class ExplainTest : public ::testing::Test {
 protected:
  void SetUp() override {
    ModelConfig cfg;
    cfg.n_d = cfg.n_a = 8;
    cfg.n_steps = 3;
    cfg.virtual_batch_size = 64;
    model_ = AttentiveModel(SynSchema(), cfg, 3);
    data_ = GenerateSynthetic(SynKind::kSyn2, 257, 4);
    model_.Run(data_.features, Mode::kTrain);
  }
  AttentiveModel model_;
  Dataset data_;
};

TEST_F(ExplainTest, ChunkingDoesNotChangeResults) {
  const ImportanceReport whole = Explain(model_, data_.features, 0);
  const ImportanceReport chunked = Explain(model_, data_.features, 50);
  // Matrix products block differently by row count, so agreement is to
  // roundoff rather than bitwise.
  ASSERT_EQ(whole.aggregate.size(), chunked.aggregate.size());
  for (std::size_t i = 0; i < whole.aggregate.size(); ++i)
    EXPECT_NEAR(whole.aggregate[i], chunked.aggregate[i], 1e-12);
  ASSERT_EQ(whole.global.size(), chunked.global.size());
  for (std::size_t j = 0; j < whole.global.size(); ++j)
    EXPECT_NEAR(whole.global[j], chunked.global[j], 1e-12);
  ASSERT_EQ(whole.step_masks.size(), 3u);
  Real total = 0;
  for (Real g : whole.global) total += g;
  EXPECT_NEAR(total, 1.0, 1e-12);
  EXPECT_EQ(whole.feature_names, SynSchema().feature_names());
}

TEST_F(ExplainTest, EmptyDatasetFails) {
  EXPECT_THROW(Explain(model_, Matrix(0, 11)), std::invalid_argument);
}

TEST_F(ExplainTest, ExportsRoundTrip) {
  const ImportanceReport report = Explain(model_, data_.features.RowSlice(0, 20));
  const fs::path dir = ScratchDir("explain");
  ExportDelimited(report, dir.string());
  for (const char* f : {"aggregate.csv", "step1_mask.csv", "step3_mask.csv", "step_weights.csv",
                        "global.csv"})
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  std::vector<std::string> header;
  EXPECT_EQ(ReadMatrix((dir / "aggregate.csv").string(), &header), report.aggregate);
  EXPECT_EQ(header, report.feature_names);

  ExportJson(report, (dir / "report.json").string());
  const ImportanceReport back = ReadJson((dir / "report.json").string());
  EXPECT_EQ(back.aggregate, report.aggregate);
  EXPECT_EQ(back.global, report.global);
  EXPECT_EQ(back.step_weights, report.step_weights);
  ASSERT_EQ(back.step_masks.size(), report.step_masks.size());
  for (std::size_t i = 0; i < back.step_masks.size(); ++i)
    EXPECT_EQ(back.step_masks[i], report.step_masks[i]);
  EXPECT_EQ(back.flagged, report.flagged);
}

}  // namespace
}  // namespace tabsel
