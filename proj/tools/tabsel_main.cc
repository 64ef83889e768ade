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

// Command-line driver: synth, train, pretrain, finetune, evaluate, explain,
// gradcheck.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "tabsel/checkpoint.h"
#include "tabsel/dataset.h"
#include "tabsel/decoder.h"
#include "tabsel/encoder.h"
#include "tabsel/experiment.h"
#include "tabsel/grad_suite.h"
#include "tabsel/interpret.h"
#include "tabsel/log.h"
#include "tabsel/metrics.h"
#include "tabsel/pretrain.h"
#include "tabsel/run_config.h"
#include "tabsel/synthetic.h"
#include "tabsel/train.h"

namespace fs = std::filesystem;
using namespace tabsel;

namespace {

enum ExitCode { kOk = 0, kValidation = 1, kRuntime = 2, kCheckFailed = 3 };

constexpr const char* kOutputRootEnv = "TABSEL_OUTPUT_ROOT";

struct RunFlags {
  std::string config;
  std::vector<std::string> overrides;
  std::string out;
  std::string from;
};

RunConfig LoadConfig(const RunFlags& flags) {
  RunConfig cfg = flags.config.empty() ? RunConfig() : RunConfig::Load(flags.config);
  cfg.ApplyOverrides(flags.overrides);
  cfg.Validate();
  if (!flags.config.empty()) {
    for (const auto& v : cfg.model().SearchSpaceViolations())
      Warn("outside the tuning search space: " + v);
  }
  if (!cfg.GetBool("desk_scale"))
    Warn("config '" + cfg.Get("name") + "' is marked desk_scale=false; expect a long run");
  return cfg;
}

fs::path OutputDir(const RunFlags& flags, const RunConfig& cfg, const std::string& command) {
  fs::path dir;
  if (!flags.out.empty()) {
    dir = flags.out;
  } else if (!cfg.Get("output_dir").empty()) {
    dir = cfg.Get("output_dir");
  } else {
    const char* root = std::getenv(kOutputRootEnv);
    const std::string name = cfg.Get("name").empty() ? command : cfg.Get("name");
    dir = fs::path(root != nullptr ? root : "runs") / name / command;
  }
  fs::create_directories(dir);
  return dir;
}

void SaveSchema(const FeatureSchema& schema, const fs::path& dir) {
  schema.Save((dir / "schema.json").string());
}

nlohmann::json TrainSummary(AttentiveModel& model, const DataSplit& split, const TrainResult& r) {
  nlohmann::json m;
  m["metric"] = MetricName(r.metric);
  m["iterations"] = r.iterations;
  m["best_iteration"] = r.best_iteration;
  m["stopped_early"] = r.stopped_early;
  m["diverged"] = r.diverged;
  if (r.diverged) m["divergence_reason"] = r.divergence_reason;
  m["parameters"] = model.NumTrainableParameters();
  if (split.valid.rows() > 0) m["valid"] = Evaluate(model, split.valid, r.metric);
  if (split.test.rows() > 0) m["test"] = Evaluate(model, split.test, r.metric);
  return m;
}

int FinishTraining(const std::string& command, const RunConfig& cfg, const fs::path& dir,
                   AttentiveModel& model, const DataSplit& split) {
  const Dataset* valid = split.valid.rows() > 0 ? &split.valid : nullptr;
  TrainResult result = Train(model, split.train, valid, cfg.train_options());
  WriteHistory((dir / "history.csv").string(), result.history);
  SaveModel((dir / "model.ckpt").string(), model);
  SaveSchema(model.schema(), dir);
  const nlohmann::json metrics = TrainSummary(model, split, result);
  WriteManifest((dir / "manifest.json").string(), command, cfg, metrics);
  std::cout << metrics.dump(2) << "\n";
  return result.diverged ? kRuntime : kOk;
}

int CmdSynth(const std::string& kind, std::size_t n, std::uint64_t seed, const std::string& out) {
  const Dataset data = GenerateSynthetic(ParseSynKind(kind), n, seed);
  const fs::path path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  WriteDelimited(out, data);
  data.schema.Save(out + ".schema.json");
  std::cout << "wrote " << n << " rows to " << out << "\n";
  return kOk;
}

int CmdTrain(const RunFlags& flags) {
  const RunConfig cfg = LoadConfig(flags);
  const DataSplit split = LoadRunData(cfg);
  const fs::path dir = OutputDir(flags, cfg, "train");
  AttentiveModel model(split.train.schema, cfg.model(), cfg.GetSeed("seed"));
  return FinishTraining("train", cfg, dir, model, split);
}

int CmdPretrain(const RunFlags& flags) {
  const RunConfig cfg = LoadConfig(flags);
  const DataSplit split = LoadRunData(cfg, /*require_target=*/false);
  const fs::path dir = OutputDir(flags, cfg, "pretrain");
  const ModelConfig mc = cfg.model();
  AttentiveModel model(split.train.schema, mc, cfg.GetSeed("seed"));
  FeatureDecoder decoder(mc, split.train.schema.num_features(), cfg.GetSeed("seed") + 1);
  const PretrainResult result = Pretrain(model, decoder, split.train, cfg.pretrain_options());
  WriteLossCurve((dir / "loss_curve.csv").string(), result.loss_curve);
  SaveModel((dir / "pretrained.ckpt").string(), model, &decoder);
  SaveSchema(model.schema(), dir);
  nlohmann::json metrics;
  metrics["iterations"] = result.loss_curve.size();
  metrics["final_loss"] = result.loss_curve.back().second;
  WriteManifest((dir / "manifest.json").string(), "pretrain", cfg, metrics);
  std::cout << metrics.dump(2) << "\n";
  return kOk;
}

int CmdFinetune(const RunFlags& flags) {
  const RunConfig cfg = LoadConfig(flags);
  const DataSplit split = LoadRunData(cfg);
  const AttentiveModel pretrained = LoadModel(flags.from);
  const auto diffs = TransferIncompatibilities(pretrained, split.train.schema, cfg.model());
  if (!diffs.empty()) {
    std::string msg = "cannot fine-tune from " + flags.from + ":";
    for (const auto& d : diffs) msg += "\n  " + d;
    throw std::invalid_argument(msg);
  }
  const fs::path dir = OutputDir(flags, cfg, "finetune");
  AttentiveModel model = TransferEncoder(pretrained, cfg.model(), cfg.GetSeed("seed"));
  return FinishTraining("finetune", cfg, dir, model, split);
}

Dataset LoadForModel(const AttentiveModel& model, const std::string& path, char delimiter,
                     bool require_target) {
  FeatureSchema schema = model.schema();
  LoadOptions options;
  options.delimiter = delimiter;
  options.freeze_vocabulary = true;
  options.require_target = require_target;
  Dataset data = LoadDelimited(path, schema, options);
  if (data.rows() == 0) throw std::invalid_argument(path + " contains no rows");
  return data;
}

int CmdEvaluate(const std::string& checkpoint, const std::string& data_path,
                const std::string& metric_name, char delimiter) {
  AttentiveModel model = LoadModel(checkpoint);
  const Dataset data = LoadForModel(model, data_path, delimiter, true);
  const Metric metric =
      metric_name.empty() ? DefaultMetric(model.schema().target) : ParseMetric(metric_name);
  nlohmann::json out;
  out[MetricName(metric)] = Evaluate(model, data, metric);
  out["rows"] = data.rows();
  std::cout << out.dump(2) << "\n";
  return kOk;
}

int CmdExplain(const std::string& checkpoint, const std::string& data_path,
               const std::string& out, const std::string& format, char delimiter) {
  AttentiveModel model = LoadModel(checkpoint);
  const Dataset data = LoadForModel(model, data_path, delimiter, false);
  const ImportanceReport report = Explain(model, data.features);
  fs::create_directories(out);
  if (format == "delimited" || format == "both") ExportDelimited(report, out);
  if (format == "json" || format == "both")
    ExportJson(report, (fs::path(out) / "importance.json").string());
  std::size_t flagged = 0;
  for (bool f : report.flagged) flagged += f;
  std::vector<std::size_t> order(report.global.size());
  for (std::size_t j = 0; j < order.size(); ++j) order[j] = j;
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return report.global[a] > report.global[b]; });
  std::cout << "global importance (" << report.rows() << " rows, " << flagged
            << " flagged uniform):\n";
  for (std::size_t j : order)
    std::printf("  %-24s %.4f\n", report.feature_names[j].c_str(), report.global[j]);
  return kOk;
}

int CmdGradcheck(const std::string& scope, bool inject) {
  GradSuiteOptions options;
  options.inject_sign_flip = inject;
  const auto reports = RunGradientSuite(ParseGradScope(scope), options);
  bool ok = true;
  for (const auto& r : reports) {
    std::printf("%-4s %-26s max_rel_err=%.3e tol=%.0e\n", r.pass ? "ok" : "FAIL", r.op.c_str(),
                r.max_relative_error, r.tolerance);
    ok = ok && r.pass;
  }
  return ok ? kOk : kCheckFailed;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"tabsel: attentive tabular learning"};
  app.require_subcommand(1);

  std::string kind, synth_out;
  std::size_t synth_n = 10000;
  std::uint64_t synth_seed = 1;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic dataset");
  synth->add_option("--kind", kind, "syn1..syn6")->required();
  synth->add_option("--n", synth_n, "Rows");
  synth->add_option("--seed", synth_seed, "Seed");
  synth->add_option("--out", synth_out, "Output file")->required();

  RunFlags flags;
  auto add_run = [&](const std::string& name, const std::string& help) {
    auto* cmd = app.add_subcommand(name, help);
    cmd->add_option("--config", flags.config, "Run configuration file");
    cmd->add_option("--override", flags.overrides, "key=value, repeatable");
    cmd->add_option("--out", flags.out, "Output directory");
    return cmd;
  };
  auto* train = add_run("train", "Supervised training");
  auto* pretrain = add_run("pretrain", "Self-supervised pretraining");
  auto* finetune = add_run("finetune", "Supervised training from a pretrained encoder");
  finetune->add_option("--from", flags.from, "Pretrained checkpoint")->required();

  std::string checkpoint, data_path, metric, explain_out, format = "both", delimiter = ",";
  auto* evaluate = app.add_subcommand("evaluate", "Score a checkpoint on labeled data");
  evaluate->add_option("--checkpoint", checkpoint)->required();
  evaluate->add_option("--data", data_path)->required();
  evaluate->add_option("--metric", metric, "accuracy, auc or mse");
  evaluate->add_option("--delimiter", delimiter);
  auto* explain = app.add_subcommand("explain", "Export feature-importance masks");
  explain->add_option("--checkpoint", checkpoint)->required();
  explain->add_option("--data", data_path)->required();
  explain->add_option("--out", explain_out)->required();
  explain->add_option("--format", format)->check(CLI::IsMember({"delimited", "json", "both"}));
  explain->add_option("--delimiter", delimiter);

  std::string scope = "all";
  bool inject = false;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient checks");
  gradcheck->add_option("--scope", scope, "layers, encoder, decoder or all");
  gradcheck->add_flag("--inject-fault", inject, "Add a deliberately wrong backward op");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (delimiter.size() != 1) throw std::invalid_argument("--delimiter must be one character");
    if (*synth) return CmdSynth(kind, synth_n, synth_seed, synth_out);
    if (*train) return CmdTrain(flags);
    if (*pretrain) return CmdPretrain(flags);
    if (*finetune) return CmdFinetune(flags);
    if (*evaluate) return CmdEvaluate(checkpoint, data_path, metric, delimiter[0]);
    if (*explain) return CmdExplain(checkpoint, data_path, explain_out, format, delimiter[0]);
    if (*gradcheck) return CmdGradcheck(scope, inject);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntime;
  }
  return kOk;
}
