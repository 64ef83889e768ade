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

#include "tabsel/schema.h"

#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace tabsel {

using nlohmann::json;

std::vector<std::string> FeatureSchema::feature_names() const {
  std::vector<std::string> names;
  names.reserve(columns.size());
  for (const auto& c : columns) names.push_back(c.name);
  return names;
}

std::optional<std::size_t> FeatureSchema::FindColumn(
    const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i].name == name) return i;
  return std::nullopt;
}

void FeatureSchema::Validate() const {
  std::vector<std::string> problems;
  if (columns.empty()) problems.push_back("schema declares no feature columns");
  std::set<std::string> seen;
  for (const auto& c : columns) {
    if (c.name.empty()) problems.push_back("column with empty name");
    if (!seen.insert(c.name).second)
      problems.push_back("duplicate column name '" + c.name + "'");
    if (c.categorical()) {
      if (c.cardinality == 0 && !c.unknown_slot)
        problems.push_back("categorical column '" + c.name +
                           "' has zero cardinality");
      if (!c.vocabulary.empty() && c.vocabulary.size() > c.cardinality)
        problems.push_back("categorical column '" + c.name + "' has " +
                           std::to_string(c.vocabulary.size()) +
                           " vocabulary entries for cardinality " +
                           std::to_string(c.cardinality));
    }
  }
  if (seen.count(target.name))
    problems.push_back("target name '" + target.name + "' is also a feature");
  if (target.outputs == 0) problems.push_back("target declares zero outputs");
  if (target.task == TaskKind::kClassification && target.outputs < 2)
    problems.push_back("classification target needs at least 2 classes");
  if (!problems.empty()) {
    std::ostringstream msg;
    msg << "invalid schema:";
    for (const auto& p : problems) msg << "\n  - " << p;
    throw std::invalid_argument(msg.str());
  }
}

bool FeatureSchema::CompatibleWith(const FeatureSchema& other,
                                   std::string* why) const {
  auto fail = [why](const std::string& m) {
    if (why != nullptr) *why = m;
    return false;
  };
  if (columns.size() != other.columns.size())
    return fail("feature count " + std::to_string(columns.size()) + " vs " +
                std::to_string(other.columns.size()));
  for (std::size_t i = 0; i < columns.size(); ++i) {
    const auto& a = columns[i];
    const auto& b = other.columns[i];
    if (a.name != b.name)
      return fail("column " + std::to_string(i) + " named '" + a.name +
                  "' vs '" + b.name + "'");
    if (a.kind != b.kind) return fail("column '" + a.name + "' kind differs");
    if (a.table_size() != b.table_size())
      return fail("column '" + a.name + "' cardinality differs");
  }
  return true;
}

json FeatureSchema::ToJson() const {
  json cols = json::array();
  for (const auto& c : columns) {
    json jc = {{"name", c.name},
               {"kind", c.categorical() ? "categorical" : "numeric"}};
    if (c.categorical()) {
      jc["cardinality"] = c.cardinality;
      jc["unknown_slot"] = c.unknown_slot;
      jc["vocabulary"] = c.vocabulary;
    }
    cols.push_back(std::move(jc));
  }
  json t = {{"name", target.name},
            {"task", target.task == TaskKind::kClassification ? "classification"
                                                              : "regression"},
            {"outputs", target.outputs}};
  if (!target.vocabulary.empty()) t["vocabulary"] = target.vocabulary;
  return {{"columns", cols}, {"target", t}};
}

FeatureSchema FeatureSchema::FromJson(const json& j) {
  FeatureSchema s;
  for (const auto& jc : j.at("columns")) {
    ColumnSpec c;
    c.name = jc.at("name").get<std::string>();
    const auto kind = jc.at("kind").get<std::string>();
    if (kind == "categorical") {
      c.kind = ColumnKind::kCategorical;
      c.vocabulary = jc.value("vocabulary", std::vector<std::string>{});
      c.cardinality = jc.value("cardinality", c.vocabulary.size());
      c.unknown_slot = jc.value("unknown_slot", false);
    } else if (kind != "numeric") {
      throw std::invalid_argument("column '" + c.name + "': unknown kind '" +
                                  kind + "'");
    }
    s.columns.push_back(std::move(c));
  }
  const auto& jt = j.at("target");
  s.target.name = jt.value("name", "label");
  const auto task = jt.value("task", "classification");
  if (task == "classification") {
    s.target.task = TaskKind::kClassification;
  } else if (task == "regression") {
    s.target.task = TaskKind::kRegression;
  } else {
    throw std::invalid_argument("unknown target task '" + task + "'");
  }
  s.target.vocabulary = jt.value("vocabulary", std::vector<std::string>{});
  s.target.outputs = jt.value(
      "outputs", s.target.vocabulary.empty() ? std::size_t{2}
                                             : s.target.vocabulary.size());
  s.Validate();
  return s;
}

void FeatureSchema::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write schema to " + path);
  out << ToJson().dump(2) << "\n";
}

FeatureSchema FeatureSchema::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read schema " + path);
  json j;
  try {
    in >> j;
  } catch (const json::parse_error& e) {
    throw std::invalid_argument("schema " + path + ": " + e.what());
  }
  return FromJson(j);
}

FeatureSchema FeatureSchema::Numeric(std::size_t num_features,
                                     TargetSpec target) {
  FeatureSchema s;
  for (std::size_t i = 0; i < num_features; ++i)
  {
    ColumnSpec c;
    c.name = "x" + std::to_string(i + 1);
    s.columns.push_back(std::move(c));
  }
  s.target = std::move(target);
  return s;
}

}  // namespace tabsel
