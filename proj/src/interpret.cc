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

#include "tabsel/interpret.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "tabsel/encoder.h"

namespace tabsel {

namespace {

nlohmann::json MatrixJson(const Matrix& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    rows.push_back(std::vector<Real>(row.begin(), row.end()));
  }
  return rows;
}

Matrix JsonMatrix(const nlohmann::json& j) {
  const auto rows = j.get<std::vector<std::vector<Real>>>();
  Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    if (rows[r].size() != m.cols()) throw ShapeError("ragged matrix in importance file");
    std::copy(rows[r].begin(), rows[r].end(), m.row(r).begin());
  }
  return m;
}

}  // namespace

Matrix StepContribution(const Matrix& decision) {
  Matrix eta(decision.rows(), 1);
  for (std::size_t b = 0; b < decision.rows(); ++b)
    for (Real v : decision.row(b)) eta(b, 0) += std::max(v, 0.0);
  return eta;
}

AggregateMask AggregateMasks(const MaskTrace& trace) {
  const std::size_t steps = trace.masks.size();
  if (steps == 0 || trace.decisions.size() != steps)
    throw std::invalid_argument("incomplete mask trace");
  const std::size_t rows = trace.masks[0].rows();
  const std::size_t d = trace.masks[0].cols();
  AggregateMask out;
  out.weights = Matrix(rows, steps);
  out.aggregate = Matrix(rows, d);
  out.flagged.assign(rows, false);
  for (std::size_t i = 0; i < steps; ++i) {
    RequireSameShape(trace.masks[i], trace.masks[0], "mask trace");
    const Matrix eta = StepContribution(trace.decisions[i]);
    for (std::size_t b = 0; b < rows; ++b) {
      out.weights(b, i) = eta(b, 0);
      for (std::size_t j = 0; j < d; ++j)
        out.aggregate(b, j) += eta(b, 0) * trace.masks[i](b, j);
    }
  }
  for (std::size_t b = 0; b < rows; ++b) {
    auto row = out.aggregate.row(b);
    Real total = 0.0;
    for (Real v : row) total += v;
    if (total > 0.0) {
      for (Real& v : row) v /= total;
    } else {
      out.flagged[b] = true;
      for (Real& v : row) v = 1.0 / static_cast<Real>(d);
    }
  }
  return out;
}

ImportanceReport MakeReport(const MaskTrace& trace, std::vector<std::string> feature_names) {
  AggregateMask agg = AggregateMasks(trace);
  if (feature_names.size() != agg.aggregate.cols())
    throw std::invalid_argument("feature name count does not match the mask width");
  ImportanceReport r;
  r.feature_names = std::move(feature_names);
  r.step_masks = trace.masks;
  r.step_weights = std::move(agg.weights);
  r.aggregate = std::move(agg.aggregate);
  r.flagged = std::move(agg.flagged);
  r.global.assign(r.aggregate.cols(), 0.0);
  for (std::size_t b = 0; b < r.rows(); ++b)
    for (std::size_t j = 0; j < r.aggregate.cols(); ++j) r.global[j] += r.aggregate(b, j);
  for (Real& g : r.global) g /= static_cast<Real>(r.rows());
  return r;
}

ImportanceReport Explain(AttentiveModel& model, const Matrix& features, std::size_t chunk_rows) {
  if (features.rows() == 0) throw std::invalid_argument("cannot explain an empty dataset");
  if (chunk_rows == 0) chunk_rows = features.rows();
  MaskTrace all;
  for (std::size_t start = 0; start < features.rows(); start += chunk_rows) {
    const std::size_t n = std::min(chunk_rows, features.rows() - start);
    MaskTrace part = model.Run(features.RowSlice(start, start + n), Mode::kInfer).trace;
    if (all.masks.empty()) {
      all = std::move(part);
      continue;
    }
    auto append = [](std::vector<Matrix>& dst, const std::vector<Matrix>& src) {
      for (std::size_t i = 0; i < dst.size(); ++i) {
        Matrix joined(dst[i].rows() + src[i].rows(), dst[i].cols());
        std::copy(dst[i].values().begin(), dst[i].values().end(), joined.values().begin());
        std::copy(src[i].values().begin(), src[i].values().end(),
                  joined.values().begin() + static_cast<std::ptrdiff_t>(dst[i].size()));
        dst[i] = std::move(joined);
      }
    };
    append(all.masks, part.masks);
    append(all.priors, part.priors);
    append(all.decisions, part.decisions);
  }
  return MakeReport(all, model.schema().feature_names());
}

Real MeanMaskEntropy(const MaskTrace& trace, Real eps) {
  return SparsityLoss(std::span<const Matrix>(trace.masks), eps);
}

void WriteMatrix(const std::string& path, const Matrix& m,
                 const std::vector<std::string>& header, char delimiter) {
  if (header.size() != m.cols())
    throw std::invalid_argument("header has " + std::to_string(header.size()) +
                                " names for " + std::to_string(m.cols()) + " columns");
  if (!m.AllFinite()) throw NonFiniteError("refusing to export non-finite values to " + path);
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17);
  for (std::size_t j = 0; j < header.size(); ++j) out << (j ? std::string(1, delimiter) : "") << header[j];
  out << "\n";
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t j = 0; j < m.cols(); ++j) out << (j ? std::string(1, delimiter) : "") << m(r, j);
    out << "\n";
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

Matrix ReadMatrix(const std::string& path, std::vector<std::string>* header, char delimiter) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  std::vector<std::string> names;
  {
    std::stringstream s(line);
    std::string cell;
    while (std::getline(s, cell, delimiter)) names.push_back(cell);
  }
  std::vector<Real> values;
  std::size_t rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream s(line);
    std::string cell;
    std::size_t count = 0;
    while (std::getline(s, cell, delimiter)) {
      values.push_back(std::stod(cell));
      ++count;
    }
    if (count != names.size())
      throw std::runtime_error(path + ":" + std::to_string(rows + 2) + ": wrong field count");
    ++rows;
  }
  if (header != nullptr) *header = names;
  return Matrix(rows, names.size(), std::move(values));
}

void ExportDelimited(const ImportanceReport& report, const std::string& dir) {
  std::filesystem::create_directories(dir);
  const std::filesystem::path root(dir);
  WriteMatrix((root / "aggregate.csv").string(), report.aggregate, report.feature_names);
  for (std::size_t i = 0; i < report.step_masks.size(); ++i) {
    WriteMatrix((root / ("step" + std::to_string(i + 1) + "_mask.csv")).string(),
                report.step_masks[i], report.feature_names);
  }
  std::vector<std::string> step_names;
  for (std::size_t i = 0; i < report.step_weights.cols(); ++i)
    step_names.push_back("step" + std::to_string(i + 1));
  WriteMatrix((root / "step_weights.csv").string(), report.step_weights, step_names);
  std::ofstream out(root / "global.csv");
  if (!out) throw std::runtime_error("cannot write " + (root / "global.csv").string());
  out << std::setprecision(17) << "feature,importance\n";
  for (std::size_t j = 0; j < report.global.size(); ++j)
    out << report.feature_names[j] << "," << report.global[j] << "\n";
}

void ExportJson(const ImportanceReport& report, const std::string& path) {
  nlohmann::json j;
  j["feature_names"] = report.feature_names;
  j["global"] = report.global;
  j["aggregate"] = MatrixJson(report.aggregate);
  j["step_weights"] = MatrixJson(report.step_weights);
  j["flagged"] = report.flagged;
  j["step_masks"] = nlohmann::json::array();
  for (const Matrix& m : report.step_masks) j["step_masks"].push_back(MatrixJson(m));
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(1);
  if (!out) throw std::runtime_error("write failed for " + path);
}

ImportanceReport ReadJson(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const nlohmann::json j = nlohmann::json::parse(in);
  ImportanceReport r;
  r.feature_names = j.at("feature_names").get<std::vector<std::string>>();
  r.global = j.at("global").get<std::vector<Real>>();
  r.aggregate = JsonMatrix(j.at("aggregate"));
  r.step_weights = JsonMatrix(j.at("step_weights"));
  r.flagged = j.at("flagged").get<std::vector<bool>>();
  for (const auto& m : j.at("step_masks")) r.step_masks.push_back(JsonMatrix(m));
  return r;
}

}  // namespace tabsel
