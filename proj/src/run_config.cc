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

#include "tabsel/run_config.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace tabsel {

namespace {

enum class Kind { kText, kReal, kCount, kBool };

struct KeySpec {
  const char* key;
  const char* fallback;
  Kind kind;
};

// Defaults mirror ModelConfig, LrSchedule and TrainOptions.
constexpr KeySpec kKeys[] = {
    {"name", "", Kind::kText},
    {"desk_scale", "true", Kind::kBool},
    // Data.
    {"data", "", Kind::kText},
    {"schema", "", Kind::kText},
    {"valid_data", "", Kind::kText},
    {"test_data", "", Kind::kText},
    {"delimiter", ",", Kind::kText},
    {"mean_impute", "false", Kind::kBool},
    {"synthetic", "", Kind::kText},
    {"synthetic_rows", "10000", Kind::kCount},
    {"synthetic_seed", "1", Kind::kCount},
    {"train_fraction", "0.8", Kind::kReal},
    {"valid_fraction", "0.1", Kind::kReal},
    {"test_fraction", "0.1", Kind::kReal},
    {"split_seed", "0", Kind::kCount},
    {"train_rows", "0", Kind::kCount},
    // Architecture.
    {"n_steps", "3", Kind::kCount},
    {"n_d", "8", Kind::kCount},
    {"n_a", "8", Kind::kCount},
    {"gamma", "1.3", Kind::kReal},
    {"lambda_sparse", "0.001", Kind::kReal},
    {"entropy_epsilon", "1e-15", Kind::kReal},
    {"n_shared", "2", Kind::kCount},
    {"n_step", "2", Kind::kCount},
    {"activation", "glu", Kind::kText},
    {"batch_size", "1024", Kind::kCount},
    {"virtual_batch_size", "128", Kind::kCount},
    {"momentum", "0.9", Kind::kReal},
    {"decoder_steps", "0", Kind::kCount},
    {"mask_probability", "0.5", Kind::kReal},
    // Optimization.
    {"learning_rate", "0.02", Kind::kReal},
    {"decay_rate", "0.95", Kind::kReal},
    {"decay_interval", "500", Kind::kCount},
    {"max_iterations", "1000", Kind::kCount},
    {"eval_every", "100", Kind::kCount},
    {"patience", "20", Kind::kCount},
    {"clip_norm", "0", Kind::kReal},
    {"metric", "", Kind::kText},
    {"pretrain_iterations", "1000", Kind::kCount},
    {"pretrain_learning_rate", "0.02", Kind::kReal},
    {"seed", "0", Kind::kCount},
    {"output_dir", "", Kind::kText},
};

const KeySpec* FindKey(const std::string& key) {
  for (const auto& k : kKeys)
    if (key == k.key) return &k;
  return nullptr;
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool ParseRealValue(const std::string& s, Real* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

bool ParseCountValue(const std::string& s, std::uint64_t* out) {
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), *out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::string CheckValue(const KeySpec& spec, const std::string& value) {
  Real r = 0.0;
  std::uint64_t c = 0;
  switch (spec.kind) {
    case Kind::kText: return "";
    case Kind::kReal:
      return ParseRealValue(value, &r) ? "" : std::string(spec.key) + ": '" + value + "' is not a number";
    case Kind::kCount:
      return ParseCountValue(value, &c) ? ""
                                        : std::string(spec.key) + ": '" + value +
                                              "' is not a non-negative integer";
    case Kind::kBool:
      return value == "true" || value == "false"
                 ? ""
                 : std::string(spec.key) + ": '" + value + "' is not true/false";
  }
  return "";
}

// Splits "key=value"; returns an error message or "".
std::string SplitAssignment(const std::string& line, std::string* key, std::string* value) {
  const auto eq = line.find('=');
  if (eq == std::string::npos) return "expected key=value, got '" + line + "'";
  *key = Trim(line.substr(0, eq));
  *value = Trim(line.substr(eq + 1));
  if (key->empty()) return "empty key in '" + line + "'";
  if (FindKey(*key) == nullptr) return "unknown key '" + *key + "'";
  return "";
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::invalid_argument([&problems] {
        std::string msg = "invalid configuration:";
        for (const auto& p : problems) msg += "\n  - " + p;
        return msg;
      }()),
      problems_(std::move(problems)) {}

RunConfig::RunConfig() {
  for (const auto& k : kKeys) values_[k.key] = k.fallback;
}

RunConfig RunConfig::Parse(const std::string& text, const std::string& source) {
  RunConfig cfg;
  std::vector<std::string> problems;
  std::map<std::string, std::size_t> seen;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = Trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::string key, value;
    const std::string where = source + ":" + std::to_string(line_no) + ": ";
    if (auto err = SplitAssignment(t, &key, &value); !err.empty()) {
      problems.push_back(where + err);
      continue;
    }
    if (auto it = seen.find(key); it != seen.end()) {
      problems.push_back(where + "duplicate key '" + key + "' (first set on line " +
                         std::to_string(it->second) + ")");
      continue;
    }
    seen[key] = line_no;
    if (auto err = CheckValue(*FindKey(key), value); !err.empty()) {
      problems.push_back(where + err);
      continue;
    }
    cfg.values_[key] = value;
  }
  if (!problems.empty()) throw ConfigError(problems);
  return cfg;
}

RunConfig RunConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError({"cannot open config file " + path});
  std::stringstream buf;
  buf << in.rdbuf();
  RunConfig cfg = Parse(buf.str(), path);
  // A relative schema path names a file shipped next to the config.
  const std::string schema = cfg.Get("schema");
  if (!schema.empty() && std::filesystem::path(schema).is_relative()) {
    const auto beside = std::filesystem::path(path).parent_path() / schema;
    if (std::filesystem::exists(beside)) cfg.Set("schema", beside.string());
  }
  return cfg;
}

void RunConfig::ApplyOverrides(const std::vector<std::string>& assignments) {
  std::vector<std::string> problems;
  for (const auto& a : assignments) {
    std::string key, value;
    if (auto err = SplitAssignment(a, &key, &value); !err.empty()) {
      problems.push_back("--override " + err);
      continue;
    }
    if (auto err = CheckValue(*FindKey(key), value); !err.empty()) {
      problems.push_back("--override " + err);
      continue;
    }
    values_[key] = value;
  }
  if (!problems.empty()) throw ConfigError(problems);
}

void RunConfig::Set(const std::string& key, const std::string& value) {
  const KeySpec* spec = FindKey(key);
  if (spec == nullptr) throw ConfigError({"unknown key '" + key + "'"});
  if (auto err = CheckValue(*spec, value); !err.empty()) throw ConfigError({err});
  values_[key] = value;
}

const std::string& RunConfig::Get(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError({"unknown key '" + key + "'"});
  return it->second;
}

Real RunConfig::GetReal(const std::string& key) const {
  Real v = 0.0;
  if (!ParseRealValue(Get(key), &v)) throw ConfigError({key + ": not a number"});
  return v;
}

std::size_t RunConfig::GetCount(const std::string& key) const {
  return static_cast<std::size_t>(GetSeed(key));
}

std::uint64_t RunConfig::GetSeed(const std::string& key) const {
  std::uint64_t v = 0;
  if (!ParseCountValue(Get(key), &v)) throw ConfigError({key + ": not a non-negative integer"});
  return v;
}

bool RunConfig::GetBool(const std::string& key) const { return Get(key) == "true"; }

ModelConfig RunConfig::model() const {
  ModelConfig c;
  c.n_steps = GetCount("n_steps");
  c.n_d = GetCount("n_d");
  c.n_a = GetCount("n_a");
  c.gamma = GetReal("gamma");
  c.lambda_sparse = GetReal("lambda_sparse");
  c.entropy_epsilon = GetReal("entropy_epsilon");
  c.n_shared = GetCount("n_shared");
  c.n_step = GetCount("n_step");
  c.activation = Get("activation") == "relu" ? BlockActivation::kRelu : BlockActivation::kGlu;
  c.batch_size = GetCount("batch_size");
  c.virtual_batch_size = GetCount("virtual_batch_size");
  c.momentum = GetReal("momentum");
  c.decoder_steps = GetCount("decoder_steps");
  c.mask_probability = GetReal("mask_probability");
  return c;
}

LrSchedule RunConfig::schedule() const {
  LrSchedule s;
  s.base = GetReal("learning_rate");
  s.decay = GetReal("decay_rate");
  s.interval = GetCount("decay_interval");
  return s;
}

TrainOptions RunConfig::train_options() const {
  TrainOptions o;
  o.schedule = schedule();
  o.max_iterations = GetCount("max_iterations");
  o.eval_every = GetCount("eval_every");
  o.patience = GetCount("patience");
  o.clip_norm = GetReal("clip_norm");
  o.seed = GetSeed("seed");
  if (!Get("metric").empty()) o.metric = ParseMetric(Get("metric"));
  return o;
}

PretrainOptions RunConfig::pretrain_options() const {
  PretrainOptions o;
  o.schedule = schedule();
  o.schedule.base = GetReal("pretrain_learning_rate");
  o.max_iterations = GetCount("pretrain_iterations");
  o.seed = GetSeed("seed");
  return o;
}

std::vector<std::string> RunConfig::Problems() const {
  std::vector<std::string> p;
  for (const auto& k : kKeys)
    if (auto err = CheckValue(k, Get(k.key)); !err.empty()) p.push_back(err);
  if (!p.empty()) return p;
  for (auto& m : model().Problems()) p.push_back(m);
  const std::string act = Get("activation");
  if (act != "glu" && act != "relu") p.push_back("activation must be glu or relu, got '" + act + "'");
  if (Get("delimiter").size() != 1) p.push_back("delimiter must be a single character");
  if (!(GetReal("learning_rate") > 0.0)) p.push_back("learning_rate must be > 0");
  if (!(GetReal("pretrain_learning_rate") > 0.0)) p.push_back("pretrain_learning_rate must be > 0");
  if (!(GetReal("decay_rate") > 0.0 && GetReal("decay_rate") <= 1.0))
    p.push_back("decay_rate must lie in (0, 1]");
  if (GetCount("decay_interval") == 0) p.push_back("decay_interval must be positive");
  if (GetCount("max_iterations") == 0) p.push_back("max_iterations must be positive");
  const Real fsum = GetReal("train_fraction") + GetReal("valid_fraction") + GetReal("test_fraction");
  if (std::abs(fsum - 1.0) > 1e-9) p.push_back("split fractions must sum to 1");
  if (!Get("metric").empty()) {
    try {
      ParseMetric(Get("metric"));
    } catch (const std::exception& e) {
      p.push_back(e.what());
    }
  }
  if (!Get("data").empty() && !Get("synthetic").empty())
    p.push_back("set either data or synthetic, not both");
  return p;
}

void RunConfig::Validate() const {
  auto p = Problems();
  if (!p.empty()) throw ConfigError(p);
}

std::string RunConfig::Canonical() const {
  std::string out;
  for (const auto& [k, v] : values_) out += k + "=" + v + "\n";
  return out;
}

std::uint64_t RunConfig::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : Canonical()) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

nlohmann::json RunConfig::ToJson() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [k, v] : values_) j[k] = v;
  return j;
}

std::vector<std::string> RunConfig::Keys() {
  std::vector<std::string> keys;
  for (const auto& k : kKeys) keys.push_back(k.key);
  return keys;
}

void WriteManifest(const std::string& path, const std::string& command,
                   const RunConfig& config, const nlohmann::json& metrics) {
  std::ostringstream hash;
  hash << std::hex << std::setw(16) << std::setfill('0') << config.Hash();
  nlohmann::json j;
  j["command"] = command;
  j["config_hash"] = hash.str();
  j["seed"] = config.GetSeed("seed");
  j["config"] = config.ToJson();
  j["metrics"] = metrics;
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

}  // namespace tabsel
