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

#ifndef TABSEL_SCHEMA_H_
#define TABSEL_SCHEMA_H_

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace tabsel {

enum class ColumnKind { kNumeric, kCategorical };
enum class TaskKind { kClassification, kRegression };

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  // Categorical only: declared number of categories, and whether a reserved
  // slot (index == cardinality) absorbs values outside the vocabulary.
  std::size_t cardinality = 0;
  bool unknown_slot = false;
  // Interned category strings; position is the category index.
  std::vector<std::string> vocabulary;

  bool categorical() const { return kind == ColumnKind::kCategorical; }
  // Embedding table length.
  std::size_t table_size() const { return cardinality + (unknown_slot ? 1 : 0); }
};

struct TargetSpec {
  std::string name = "label";
  TaskKind task = TaskKind::kClassification;
  // Number of classes for classification, number of outputs for regression.
  std::size_t outputs = 2;
  // Class label strings for classification, in class-index order. Empty
  // means the file already holds integer class indices.
  std::vector<std::string> vocabulary;
};

// Column declarations for a dataset: feature kinds in order plus the target.
struct FeatureSchema {
  std::vector<ColumnSpec> columns;
  TargetSpec target;

  std::size_t num_features() const { return columns.size(); }
  std::size_t output_width() const { return target.outputs; }
  std::vector<std::string> feature_names() const;
  std::optional<std::size_t> FindColumn(const std::string& name) const;

  // Throws std::invalid_argument listing every problem found.
  void Validate() const;

  // Checks columns and target agree (names, kinds, cardinalities).
  bool CompatibleWith(const FeatureSchema& other, std::string* why) const;

  nlohmann::json ToJson() const;
  static FeatureSchema FromJson(const nlohmann::json& j);

  void Save(const std::string& path) const;
  static FeatureSchema Load(const std::string& path);

  // All-numeric schema with names x1..xD (or the given names).
  static FeatureSchema Numeric(std::size_t num_features, TargetSpec target);
};

}  // namespace tabsel

#endif  // TABSEL_SCHEMA_H_
