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

#include "tabsel/dataset.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "tabsel/log.h"

namespace tabsel {

namespace {

std::string Trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  s = s.substr(b, e - b);
  if (s.size() >= 2 && s.front() == '"' && s.back() == '"')
    s = s.substr(1, s.size() - 2);
  return std::string(s);
}

std::vector<std::string> SplitLine(const std::string& line, char delimiter) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find(delimiter, start);
    if (pos == std::string::npos) {
      fields.push_back(Trim(std::string_view(line).substr(start)));
      break;
    }
    fields.push_back(Trim(std::string_view(line).substr(start, pos - start)));
    start = pos + 1;
  }
  return fields;
}

bool IsMissing(const std::string& s) {
  return s.empty() || s == "?" || s == "NA" || s == "NaN" || s == "nan";
}

bool ParseReal(const std::string& s, Real* out) {
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, *out);
  return ec == std::errc() && ptr == last && std::isfinite(*out);
}

// Index of `value` in `vocab`, interning it when allowed.
std::optional<std::size_t> Intern(std::vector<std::string>& vocab,
                                  std::unordered_map<std::string, std::size_t>& index,
                                  const std::string& value, bool frozen) {
  auto it = index.find(value);
  if (it != index.end()) return it->second;
  if (frozen) return std::nullopt;
  vocab.push_back(value);
  index.emplace(value, vocab.size() - 1);
  return vocab.size() - 1;
}

std::string FormatReal(Real v) {
  std::ostringstream s;
  s << std::setprecision(17) << v;
  return s.str();
}

}  // namespace

Dataset Dataset::Subset(std::span<const std::size_t> indices) const {
  Dataset out;
  out.schema = schema;
  out.features = features.GatherRows(indices);
  if (!targets.empty()) out.targets = targets.GatherRows(indices);
  return out;
}

std::vector<Real> Dataset::target_column(std::size_t col) const {
  std::vector<Real> out(targets.rows());
  for (std::size_t i = 0; i < targets.rows(); ++i) out[i] = targets(i, col);
  return out;
}

Dataset LoadDelimited(const std::string& path, FeatureSchema& schema,
                      const LoadOptions& options) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file, header row required");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = SplitLine(line, options.delimiter);

  const std::size_t d = schema.num_features();
  std::vector<std::size_t> feature_pos(d);
  for (std::size_t j = 0; j < d; ++j) {
    auto it = std::find(header.begin(), header.end(), schema.columns[j].name);
    if (it == header.end())
      throw ParseError(path + ": header lacks column '" + schema.columns[j].name + "'");
    feature_pos[j] = static_cast<std::size_t>(it - header.begin());
  }
  std::optional<std::size_t> target_pos;
  if (auto it = std::find(header.begin(), header.end(), schema.target.name);
      it != header.end()) {
    target_pos = static_cast<std::size_t>(it - header.begin());
  } else if (options.require_target) {
    throw ParseError(path + ": header lacks target column '" + schema.target.name + "'");
  }

  std::vector<std::unordered_map<std::string, std::size_t>> vocab_index(d);
  for (std::size_t j = 0; j < d; ++j)
    for (std::size_t k = 0; k < schema.columns[j].vocabulary.size(); ++k)
      vocab_index[j].emplace(schema.columns[j].vocabulary[k], k);
  std::unordered_map<std::string, std::size_t> class_index;
  for (std::size_t k = 0; k < schema.target.vocabulary.size(); ++k)
    class_index.emplace(schema.target.vocabulary[k], k);
  const bool classification = schema.target.task == TaskKind::kClassification;
  // Integer class labels are used verbatim when no class vocabulary exists.
  const bool integer_classes = classification && schema.target.vocabulary.empty();
  const std::size_t target_width = classification ? 1 : schema.target.outputs;
  if (!classification && target_width != 1 && target_pos)
    throw ParseError(path + ": multi-output regression targets are not supported in delimited files");

  std::vector<Real> values;
  std::vector<Real> targets;
  std::vector<std::pair<std::size_t, std::size_t>> missing;  // (row, col)
  std::size_t row = 0;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (Trim(line).empty()) continue;
    const auto fields = SplitLine(line, options.delimiter);
    if (fields.size() != header.size()) {
      throw ParseError(path + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(header.size()) + " fields, found " +
                       std::to_string(fields.size()));
    }
    for (std::size_t j = 0; j < d; ++j) {
      const std::string& f = fields[feature_pos[j]];
      ColumnSpec& col = schema.columns[j];
      if (!col.categorical()) {
        Real v = 0.0;
        if (IsMissing(f)) {
          if (!options.mean_impute)
            throw ParseError(path + ":" + std::to_string(line_no) +
                             ": missing numeric value in column '" + col.name + "'");
          missing.emplace_back(row, j);
        } else if (!ParseReal(f, &v)) {
          throw ParseError(path + ":" + std::to_string(line_no) + ": '" + f +
                           "' is not a number (column '" + col.name + "')");
        }
        values.push_back(v);
        continue;
      }
      std::optional<std::size_t> idx;
      if (!IsMissing(f)) idx = Intern(col.vocabulary, vocab_index[j], f, options.freeze_vocabulary);
      if (!idx) {
        if (!col.unknown_slot) {
          throw ParseError(path + ":" + std::to_string(line_no) + ": unknown category '" +
                           f + "' in column '" + col.name + "' and no unknown slot declared");
        }
        // Resolved to the unknown slot once the final cardinality is known.
        values.push_back(-1.0);
        continue;
      }
      values.push_back(static_cast<Real>(*idx));
    }
    if (target_pos) {
      const std::string& t = fields[*target_pos];
      if (IsMissing(t))
        throw ParseError(path + ":" + std::to_string(line_no) + ": missing target");
      Real v = 0.0;
      if (!classification) {
        if (!ParseReal(t, &v))
          throw ParseError(path + ":" + std::to_string(line_no) + ": target '" + t +
                           "' is not a number");
      } else if (integer_classes) {
        if (!ParseReal(t, &v) || v < 0.0 || std::floor(v) != v ||
            v >= static_cast<Real>(schema.target.outputs)) {
          throw ParseError(path + ":" + std::to_string(line_no) + ": class label '" + t +
                           "' outside [0, " + std::to_string(schema.target.outputs) + ")");
        }
      } else {
        auto idx = Intern(schema.target.vocabulary, class_index, t, options.freeze_vocabulary);
        if (!idx)
          throw ParseError(path + ":" + std::to_string(line_no) + ": unknown class '" + t + "'");
        v = static_cast<Real>(*idx);
      }
      targets.push_back(v);
    }
    ++row;
  }

  for (auto& col : schema.columns)
    if (col.categorical()) col.cardinality = std::max(col.cardinality, col.vocabulary.size());
  if (classification && !integer_classes)
    schema.target.outputs = std::max(schema.target.outputs, schema.target.vocabulary.size());

  Dataset data;
  data.schema = schema;
  data.features = Matrix(row, d, std::move(values));
  for (std::size_t j = 0; j < d; ++j) {
    if (!schema.columns[j].categorical()) continue;
    for (std::size_t i = 0; i < row; ++i)
      if (data.features(i, j) < 0.0)
        data.features(i, j) = static_cast<Real>(schema.columns[j].cardinality);
  }
  if (!missing.empty()) {
    std::vector<Real> sum(d, 0.0);
    std::vector<std::size_t> count(d, row);
    for (auto [i, j] : missing) --count[j];
    for (std::size_t i = 0; i < row; ++i)
      for (std::size_t j = 0; j < d; ++j)
        if (!schema.columns[j].categorical()) sum[j] += data.features(i, j);
    for (auto [i, j] : missing) {
      if (count[j] == 0)
        throw ParseError(path + ": column '" + schema.columns[j].name +
                         "' has no values to impute from");
      data.features(i, j) = sum[j] / static_cast<Real>(count[j]);
    }
  }
  if (target_pos) data.targets = Matrix(row, target_width, std::move(targets));
  return data;
}

void WriteDelimited(const std::string& path, const Dataset& data, char delimiter) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  const auto& schema = data.schema;
  const bool has_target = !data.targets.empty();
  for (std::size_t j = 0; j < schema.num_features(); ++j)
    out << (j ? std::string(1, delimiter) : "") << schema.columns[j].name;
  if (has_target) out << delimiter << schema.target.name;
  out << "\n";
  for (std::size_t i = 0; i < data.rows(); ++i) {
    for (std::size_t j = 0; j < schema.num_features(); ++j) {
      if (j) out << delimiter;
      const ColumnSpec& col = schema.columns[j];
      const Real v = data.features(i, j);
      if (col.categorical() && v >= 0.0 && v < static_cast<Real>(col.vocabulary.size())) {
        out << col.vocabulary[static_cast<std::size_t>(v)];
      } else {
        out << FormatReal(v);
      }
    }
    if (has_target) {
      const Real t = data.targets(i, 0);
      out << delimiter;
      const auto& vocab = schema.target.vocabulary;
      if (schema.target.task == TaskKind::kClassification && t >= 0.0 &&
          t < static_cast<Real>(vocab.size())) {
        out << vocab[static_cast<std::size_t>(t)];
      } else {
        out << FormatReal(t);
      }
    }
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

DataSplit Split(const Dataset& data, std::array<Real, 3> fractions,
                std::uint64_t seed) {
  const Real total = fractions[0] + fractions[1] + fractions[2];
  if (std::abs(total - 1.0) > 1e-9 || fractions[0] < 0 || fractions[1] < 0 ||
      fractions[2] < 0) {
    throw std::invalid_argument("split fractions must be non-negative and sum to 1");
  }
  const std::size_t n = data.rows();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_train = static_cast<std::size_t>(std::llround(fractions[0] * static_cast<Real>(n)));
  const auto n_valid = std::min(
      n - n_train, static_cast<std::size_t>(std::llround(fractions[1] * static_cast<Real>(n))));
  const std::size_t sizes[3] = {n_train, n_valid, n - n_train - n_valid};
  for (int k = 0; k < 3; ++k) {
    if (fractions[k] > 0.0 && sizes[k] == 0)
      throw std::invalid_argument("split produces an empty partition for a nonzero fraction");
  }
  std::span<const std::size_t> all(order);
  DataSplit s;
  s.train = data.Subset(all.subspan(0, n_train));
  s.valid = data.Subset(all.subspan(n_train, n_valid));
  s.test = data.Subset(all.subspan(n_train + n_valid));
  return s;
}

std::vector<std::vector<std::size_t>> EpochBatches(std::size_t rows,
                                                   std::size_t batch_size,
                                                   bool shuffle, Rng& rng) {
  if (batch_size < 2)
    throw std::invalid_argument("batch size must be at least 2 for batch normalization");
  if (rows == 0) throw std::invalid_argument("cannot batch an empty dataset");
  if (batch_size > rows) {
    Warn("batch size " + std::to_string(batch_size) + " exceeds " + std::to_string(rows) +
         " rows; using a single batch");
    batch_size = rows;
  }
  std::vector<std::size_t> order(rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  if (shuffle) std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::vector<std::size_t>> batches;
  for (std::size_t b = 0; b < rows; b += batch_size)
    batches.emplace_back(order.begin() + b, order.begin() + std::min(b + batch_size, rows));
  // A lone trailing row has no batch variance; fold it into the previous batch.
  if (batches.size() > 1 && batches.back().size() == 1) {
    batches[batches.size() - 2].push_back(batches.back()[0]);
    batches.pop_back();
  }
  return batches;
}

BatchIterator::BatchIterator(const Dataset& data, std::size_t batch_size,
                             bool shuffle, std::uint64_t seed)
    : data_(&data), batch_size_(batch_size), shuffle_(shuffle), rng_(seed) {
  current_ = EpochBatches(data.rows(), batch_size_, shuffle_, rng_);
}

BatchIterator::Batch BatchIterator::Next() {
  if (position_ == current_.size()) {
    current_ = EpochBatches(data_->rows(), batch_size_, shuffle_, rng_);
    position_ = 0;
    ++epoch_;
  }
  Batch b;
  b.rows = current_[position_++];
  b.features = data_->features.GatherRows(b.rows);
  if (!data_->targets.empty()) b.targets = data_->targets.GatherRows(b.rows);
  return b;
}

}  // namespace tabsel
