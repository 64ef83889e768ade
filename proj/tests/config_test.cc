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

#include <filesystem>
#include <fstream>
#include <set>

#include <gtest/gtest.h>

#include "tabsel/experiment.h"
#include "tabsel/run_config.h"

namespace tabsel {
namespace {

namespace fs = std::filesystem;

TEST(RunConfig, DefaultsAreValid) {
  RunConfig cfg;
  EXPECT_TRUE(cfg.Problems().empty());
  EXPECT_EQ(cfg.Get("delimiter"), ",");
  EXPECT_TRUE(cfg.GetBool("desk_scale"));
}

TEST(RunConfig, ParsesFlatKeyValues) {
  const RunConfig cfg = RunConfig::Parse("# comment\nn_d = 32\n\nlambda_sparse=0.01\nsynthetic = syn2\n");
  EXPECT_EQ(cfg.GetCount("n_d"), 32u);
  EXPECT_EQ(cfg.model().n_d, 32u);
  EXPECT_EQ(cfg.model().lambda_sparse, 0.01);
  EXPECT_EQ(cfg.Get("synthetic"), "syn2");
}

TEST(RunConfig, AllProblemsReportedTogether) {
  try {
    RunConfig::Parse("n_d = -3\nbogus = 1\nn_d = 4\nno equals sign\ngamma = abc\n", "x.cfg");
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    ASSERT_EQ(e.problems().size(), 5u) << e.what();
    EXPECT_NE(e.problems()[0].find("x.cfg:1"), std::string::npos);
    EXPECT_NE(e.problems()[1].find("unknown key 'bogus'"), std::string::npos);
    EXPECT_NE(e.problems()[2].find("duplicate key 'n_d'"), std::string::npos);
  }
}

TEST(RunConfig, ModelInvariantsRevalidated) {
  RunConfig cfg;
  cfg.Set("gamma", "0.5");
  cfg.Set("n_steps", "0");
  cfg.Set("train_fraction", "0.9");
  const auto p = cfg.Problems();
  EXPECT_EQ(p.size(), 3u);
  EXPECT_THROW(cfg.Validate(), ConfigError);
}

TEST(RunConfig, OverridesApplyAndReportTogether) {
  RunConfig cfg;
  cfg.ApplyOverrides({"lambda_sparse=0", "seed=5"});
  EXPECT_EQ(cfg.model().lambda_sparse, 0.0);
  EXPECT_EQ(cfg.GetSeed("seed"), 5u);
  try {
    cfg.ApplyOverrides({"nope=1", "n_a=x"});
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.problems().size(), 2u);
  }
}

TEST(RunConfig, CanonicalFormReparsesToSameHash) {
  RunConfig cfg;
  cfg.ApplyOverrides({"n_d=24", "name=probe", "learning_rate=0.005"});
  const RunConfig back = RunConfig::Parse(cfg.Canonical());
  EXPECT_EQ(back.Canonical(), cfg.Canonical());
  EXPECT_EQ(back.Hash(), cfg.Hash());
  RunConfig other = cfg;
  other.Set("seed", "1");
  EXPECT_NE(other.Hash(), cfg.Hash());
}

TEST(RunConfig, ScheduleAndTrainOptions) {
  const RunConfig cfg = RunConfig::Parse(
      "learning_rate=0.02\ndecay_rate=0.7\ndecay_interval=200\nmax_iterations=4000\nmetric=auc\n");
  EXPECT_NEAR(cfg.schedule().At(400), 0.02 * 0.49, 1e-15);
  EXPECT_EQ(cfg.train_options().max_iterations, 4000u);
  EXPECT_EQ(*cfg.train_options().metric, Metric::kAuc);
}

std::vector<fs::path> PresetFiles() {
  std::vector<fs::path> out;
  for (const auto& e : fs::recursive_directory_iterator(TABSEL_PRESET_DIR))
    if (e.path().extension() == ".cfg") out.push_back(e.path());
  std::sort(out.begin(), out.end());
  return out;
}

TEST(Presets, AllLoadAndValidate) {
  const auto files = PresetFiles();
  EXPECT_GE(files.size(), 14u + 15u);
  for (const auto& f : files) {
    SCOPED_TRACE(f.string());
    const RunConfig cfg = RunConfig::Load(f.string());
    EXPECT_TRUE(cfg.Problems().empty());
  }
}

TEST(Presets, DeskScaleMarking) {
  const std::set<std::string> desk = {"syn1", "syn2", "syn3", "syn4", "syn5", "syn6",
                                      "syn1_viz", "syn2_viz", "syn3_viz", "syn4_viz",
                                      "syn5_viz", "syn6_viz", "mushroom", "adult"};
  for (const auto& f : PresetFiles()) {
    const RunConfig cfg = RunConfig::Load(f.string());
    EXPECT_EQ(cfg.GetBool("desk_scale"), desk.count(f.stem().string()) == 1 &&
                                             f.parent_path().filename() != "ablations")
        << f;
  }
}

TEST(Presets, Syn2MatchesPublishedSettings) {
  const RunConfig cfg = RunConfig::Load(std::string(TABSEL_PRESET_DIR) + "/syn2.cfg");
  const ModelConfig m = cfg.model();
  EXPECT_EQ(m.n_d, 16u);
  EXPECT_EQ(m.n_a, 16u);
  EXPECT_EQ(m.batch_size, 3000u);
  EXPECT_EQ(m.virtual_batch_size, 100u);
  EXPECT_EQ(m.momentum, 0.7);
  EXPECT_EQ(m.lambda_sparse, 0.01);
  EXPECT_EQ(m.n_steps, 4u);
  EXPECT_EQ(m.gamma, 2.0);
  EXPECT_EQ(cfg.GetReal("learning_rate"), 0.02);
  EXPECT_EQ(cfg.GetReal("decay_rate"), 0.7);
  EXPECT_EQ(cfg.GetCount("decay_interval"), 200u);
  EXPECT_EQ(cfg.GetCount("max_iterations"), 4000u);
  // The published batch sizes sit outside the tuning grid.
  const auto v = m.SearchSpaceViolations();
  EXPECT_EQ(v.size(), 2u);
}

TEST(Presets, SchemaSidecarsResolveBesideConfig) {
  const RunConfig cfg = RunConfig::Load(std::string(TABSEL_PRESET_DIR) + "/mushroom.cfg");
  EXPECT_TRUE(fs::exists(cfg.Get("schema"))) << cfg.Get("schema");
  const FeatureSchema s = FeatureSchema::Load(cfg.Get("schema"));
  EXPECT_EQ(s.num_features(), 22u);
  EXPECT_TRUE(s.FindColumn("odor").has_value());
}

TEST(LoadRunData, SyntheticSplitSizes) {
  const RunConfig cfg = RunConfig::Load(std::string(TABSEL_PRESET_DIR) + "/syn2.cfg");
  const DataSplit s = LoadRunData(cfg);
  EXPECT_EQ(s.train.rows(), 10000u);
  EXPECT_EQ(s.valid.rows(), 2000u);
  EXPECT_EQ(s.test.rows(), 8000u);
  RunConfig small = cfg;
  small.Set("train_rows", "1000");
  EXPECT_EQ(LoadRunData(small).train.rows(), 1000u);
}

TEST(LoadRunData, ExplicitTestFileCarvesValidation) {
  const fs::path dir = fs::temp_directory_path() / "tabsel_rundata";
  fs::create_directories(dir);
  {
    std::ofstream train(dir / "train.csv"), test(dir / "test.csv");
    train << "a,c,label\n";
    for (int i = 0; i < 20; ++i) train << i << "," << (i % 2 ? "u" : "v") << "," << i % 2 << "\n";
    test << "a,c,label\n1,u,1\n2,w,0\n";
    nlohmann::json schema = {
        {"columns", {{{"name", "a"}, {"kind", "numeric"}},
                     {{"name", "c"}, {"kind", "categorical"}, {"vocabulary", {"u", "v"}}, {"unknown_slot", true}}}},
        {"target", {{"name", "label"}, {"outputs", 2}}}};
    std::ofstream(dir / "schema.json") << schema.dump();
  }
  RunConfig cfg;
  cfg.Set("data", (dir / "train.csv").string());
  cfg.Set("test_data", (dir / "test.csv").string());
  cfg.Set("schema", (dir / "schema.json").string());
  cfg.Set("train_fraction", "0.8");
  cfg.Set("valid_fraction", "0.2");
  cfg.Set("test_fraction", "0");
  const DataSplit s = LoadRunData(cfg);
  EXPECT_EQ(s.train.rows(), 16u);
  EXPECT_EQ(s.valid.rows(), 4u);
  ASSERT_EQ(s.test.rows(), 2u);
  // "w" never appeared in training, so it lands in the unknown slot.
  EXPECT_EQ(s.test.features(1, 1), 2.0);
  EXPECT_EQ(s.train.schema.columns[1].cardinality, 2u);
}

}  // namespace
}  // namespace tabsel
