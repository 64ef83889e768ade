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

#ifndef TABSEL_RUN_CONFIG_H_
#define TABSEL_RUN_CONFIG_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "tabsel/encoder.h"
#include "tabsel/optimizer.h"
#include "tabsel/pretrain.h"
#include "tabsel/train.h"

namespace tabsel {

// Raised with every problem found in a configuration.
class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

// Flat key=value run configuration. Lines starting with '#' are comments.
// Every key has a default; unknown keys are rejected.
class RunConfig {
 public:
  RunConfig();

  static RunConfig Parse(const std::string& text, const std::string& source = "<config>");
  static RunConfig Load(const std::string& path);

  // Applies "key=value" assignments; all bad ones are reported together.
  void ApplyOverrides(const std::vector<std::string>& assignments);
  void Set(const std::string& key, const std::string& value);

  const std::string& Get(const std::string& key) const;
  Real GetReal(const std::string& key) const;
  std::size_t GetCount(const std::string& key) const;
  std::uint64_t GetSeed(const std::string& key) const;
  bool GetBool(const std::string& key) const;

  ModelConfig model() const;
  LrSchedule schedule() const;
  TrainOptions train_options() const;
  PretrainOptions pretrain_options() const;

  // Value-type and model-config problems; empty when the config is usable.
  std::vector<std::string> Problems() const;
  void Validate() const;

  // All keys in sorted order, one "key=value" per line.
  std::string Canonical() const;
  // 64-bit FNV-1a of Canonical().
  std::uint64_t Hash() const;
  nlohmann::json ToJson() const;

  static std::vector<std::string> Keys();

 private:
  std::map<std::string, std::string> values_;
};

// Writes manifest.json: command, config (canonical values and hash), seed and
// the given metrics.
void WriteManifest(const std::string& path, const std::string& command,
                   const RunConfig& config, const nlohmann::json& metrics);

}  // namespace tabsel

#endif  // TABSEL_RUN_CONFIG_H_
