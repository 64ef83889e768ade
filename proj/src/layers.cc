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

#include "tabsel/layers.h"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "tabsel/log.h"
#include "tabsel/ops.h"

namespace tabsel {

Matrix GlorotUniform(std::size_t in, std::size_t out, Rng& rng) {
  const Real limit = std::sqrt(6.0 / static_cast<Real>(in + out));
  std::uniform_real_distribution<Real> dist(-limit, limit);
  Matrix w(in, out);
  for (Real& v : w.values()) v = dist(rng);
  return w;
}

FcLayer::FcLayer(const std::string& name, std::size_t in, std::size_t out,
                 Rng& rng)
    : weight(name + ".weight", GlorotUniform(in, out, rng)),
      bias(name + ".bias", Matrix(1, out)) {}

Var FcLayer::Forward(Tape& tape, Var x) {
  if (x.cols() != in()) {
    throw ShapeError("fc '" + weight.name + "': input " +
                     x.value().ShapeString() + " does not match weight " +
                     weight.value.ShapeString());
  }
  return AddRowBroadcast(MatMul(x, tape.Param(weight)), tape.Param(bias));
}

BatchNorm::BatchNorm(const std::string& name, std::size_t dim,
                     std::size_t virtual_batch_size, Real momentum,
                     Real epsilon)
    : gain(name + ".gain", Matrix(1, dim, 1.0)),
      shift(name + ".shift", Matrix(1, dim)),
      stats{name, Matrix(1, dim), Matrix(1, dim, 1.0), false},
      virtual_batch_size(virtual_batch_size),
      momentum(momentum),
      epsilon(epsilon) {
  if (!(momentum > 0.0 && momentum <= 1.0)) {
    throw std::invalid_argument("batch norm '" + name + "': momentum " +
                                std::to_string(momentum) +
                                " outside (0, 1]");
  }
}

std::vector<std::pair<std::size_t, std::size_t>> BatchNorm::VirtualBatches(
    std::size_t batch_rows, std::size_t virtual_batch_size) {
  std::vector<std::pair<std::size_t, std::size_t>> chunks;
  if (batch_rows == 0) return chunks;
  if (virtual_batch_size == 0 || virtual_batch_size >= batch_rows) {
    chunks.emplace_back(0, batch_rows);
    return chunks;
  }
  for (std::size_t begin = 0; begin < batch_rows; begin += virtual_batch_size)
    chunks.emplace_back(begin, std::min(begin + virtual_batch_size, batch_rows));
  if (chunks.size() > 1 && chunks.back().second - chunks.back().first == 1) {
    chunks.pop_back();
    chunks.back().second = batch_rows;
  }
  return chunks;
}

BnStats BatchNorm::NewStats(const std::string& name) const {
  return BnStats{name, Matrix(1, dim()), Matrix(1, dim(), 1.0), false};
}

Var BatchNorm::Forward(Tape& tape, Var x, Mode mode, BnStats& site) {
  // Record the parameters first: new nodes may move earlier node values.
  Var g = tape.Param(gain);
  Var s = tape.Param(shift);
  const Matrix& xv = x.value();
  const std::size_t d = dim();
  if (xv.cols() != d) {
    throw ShapeError("batch norm '" + gain.name + "': input " +
                     xv.ShapeString() + " does not have " + std::to_string(d) +
                     " columns");
  }
  const Matrix& gv = gain.value;
  const Matrix& sv = shift.value;
  const std::size_t n = xv.rows();

  if (mode == Mode::kInfer) {
    if (!site.ready) {
      throw std::logic_error("batch norm '" + site.name +
                             "': infer mode before any training step");
    }
    Matrix inv(1, d), xhat(n, d), out(n, d);
    for (std::size_t j = 0; j < d; ++j)
      inv[j] = 1.0 / std::sqrt(site.var[j] + epsilon);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        xhat(i, j) = (xv(i, j) - site.mean[j]) * inv[j];
        out(i, j) = gv[j] * xhat(i, j) + sv[j];
      }
    }
    const std::size_t ix = x.id(), ig = g.id(), is = s.id();
    return tape.Record(
        "batch_norm_infer", std::move(out), {x, g, s},
        [ix, ig, is, inv, xhat = std::move(xhat)](Tape& t, std::size_t self) {
          const Matrix& dy = t.grad(self);
          const Matrix& gain_v = t.value(ig);
          const std::size_t rows = dy.rows(), cols = dy.cols();
          if (t.requires_grad(ix)) {
            Matrix dx(rows, cols);
            for (std::size_t i = 0; i < rows; ++i)
              for (std::size_t j = 0; j < cols; ++j)
                dx(i, j) = dy(i, j) * gain_v[j] * inv[j];
            t.AccumulateGrad(ix, dx);
          }
          Matrix dg(1, cols), ds(1, cols);
          for (std::size_t i = 0; i < rows; ++i) {
            for (std::size_t j = 0; j < cols; ++j) {
              dg[j] += dy(i, j) * xhat(i, j);
              ds[j] += dy(i, j);
            }
          }
          t.AccumulateGrad(ig, dg);
          t.AccumulateGrad(is, ds);
        });
  }

  if (virtual_batch_size > n && !warned_oversized_) {
    Warn("batch norm '" + gain.name + "': virtual batch size " +
         std::to_string(virtual_batch_size) + " exceeds batch of " +
         std::to_string(n) + " rows; using one virtual batch");
    warned_oversized_ = true;
  }
  auto chunks = VirtualBatches(n, virtual_batch_size);
  Matrix xhat(n, d), out(n, d);
  // Per-chunk inverse standard deviations, chunk-major.
  Matrix inv(chunks.size(), d);
  Matrix mean_acc(1, d), var_acc(1, d);
  for (std::size_t c = 0; c < chunks.size(); ++c) {
    const auto [begin, end] = chunks[c];
    const Real count = static_cast<Real>(end - begin);
    Matrix mean(1, d), var(1, d);
    for (std::size_t i = begin; i < end; ++i)
      for (std::size_t j = 0; j < d; ++j) mean[j] += xv(i, j);
    for (std::size_t j = 0; j < d; ++j) mean[j] /= count;
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        const Real c0 = xv(i, j) - mean[j];
        var[j] += c0 * c0;
      }
    }
    for (std::size_t j = 0; j < d; ++j) {
      var[j] /= count;
      inv(c, j) = 1.0 / std::sqrt(var[j] + epsilon);
      mean_acc[j] += mean[j];
      var_acc[j] += var[j];
    }
    for (std::size_t i = begin; i < end; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        xhat(i, j) = (xv(i, j) - mean[j]) * inv(c, j);
        out(i, j) = gv[j] * xhat(i, j) + sv[j];
      }
    }
  }
  if (!chunks.empty()) {
    const Real k = static_cast<Real>(chunks.size());
    for (std::size_t j = 0; j < d; ++j) {
      site.mean[j] = momentum * site.mean[j] + (1.0 - momentum) * mean_acc[j] / k;
      site.var[j] = momentum * site.var[j] + (1.0 - momentum) * var_acc[j] / k;
    }
    site.ready = true;
  }

  const std::size_t ix = x.id(), ig = g.id(), is = s.id();
  return tape.Record(
      "batch_norm", std::move(out), {x, g, s},
      [ix, ig, is, chunks = std::move(chunks), inv = std::move(inv),
       xhat = std::move(xhat)](Tape& t, std::size_t self) {
        const Matrix& dy = t.grad(self);
        const Matrix& gain_v = t.value(ig);
        const std::size_t cols = dy.cols();
        Matrix dg(1, cols), ds(1, cols);
        for (std::size_t i = 0; i < dy.rows(); ++i) {
          for (std::size_t j = 0; j < cols; ++j) {
            dg[j] += dy(i, j) * xhat(i, j);
            ds[j] += dy(i, j);
          }
        }
        if (t.requires_grad(ix)) {
          Matrix dx(dy.rows(), cols);
          Matrix sum_dxhat(1, cols), sum_dxhat_xhat(1, cols);
          for (std::size_t c = 0; c < chunks.size(); ++c) {
            const auto [begin, end] = chunks[c];
            const Real count = static_cast<Real>(end - begin);
            sum_dxhat.Fill(0.0);
            sum_dxhat_xhat.Fill(0.0);
            for (std::size_t i = begin; i < end; ++i) {
              for (std::size_t j = 0; j < cols; ++j) {
                const Real dxh = dy(i, j) * gain_v[j];
                sum_dxhat[j] += dxh;
                sum_dxhat_xhat[j] += dxh * xhat(i, j);
              }
            }
            for (std::size_t i = begin; i < end; ++i) {
              for (std::size_t j = 0; j < cols; ++j) {
                const Real dxh = dy(i, j) * gain_v[j];
                dx(i, j) = inv(c, j) / count *
                           (count * dxh - sum_dxhat[j] -
                            xhat(i, j) * sum_dxhat_xhat[j]);
              }
            }
          }
          t.AccumulateGrad(ix, dx);
        }
        t.AccumulateGrad(ig, dg);
        t.AccumulateGrad(is, ds);
      });
}

GluBlock::GluBlock(const std::string& name, std::size_t in, std::size_t units,
                   std::size_t virtual_batch_size, Real momentum, Rng& rng,
                   BlockActivation activation)
    : fc(name + ".fc", in,
         activation == BlockActivation::kGlu ? 2 * units : units, rng),
      bn(name + ".bn", activation == BlockActivation::kGlu ? 2 * units : units,
         virtual_batch_size, momentum),
      activation(activation) {}

Var GluBlock::Forward(Tape& tape, Var x, Mode mode, BnStats& site) {
  Var h = bn.Forward(tape, fc.Forward(tape, x), mode, site);
  if (activation == BlockActivation::kRelu) return Relu(h);
  const std::size_t u = units();
  return Mul(SliceCols(h, 0, u), Sigmoid(SliceCols(h, u, 2 * u)));
}

EmbeddingTable::EmbeddingTable(const FeatureSchema& schema, Rng& rng) {
  std::uniform_real_distribution<Real> dist(-0.1, 0.1);
  for (const auto& c : schema.columns) {
    cardinality.push_back(c.cardinality);
    unknown_slot.push_back(c.unknown_slot);
    if (!c.categorical()) {
      column_table.push_back(-1);
      continue;
    }
    Matrix values(1, c.table_size());
    for (Real& v : values.values()) v = dist(rng);
    column_table.push_back(static_cast<int>(tables.size()));
    tables.emplace_back("embedding." + c.name, std::move(values));
  }
}

Parameter* EmbeddingTable::table_for(std::size_t column) {
  const int t = column_table.at(column);
  return t < 0 ? nullptr : &tables[static_cast<std::size_t>(t)];
}

std::vector<Parameter*> EmbeddingTable::parameters() {
  std::vector<Parameter*> out;
  for (auto& t : tables) out.push_back(&t);
  return out;
}

Var EmbeddingTable::Embed(Tape& tape, Var raw) {
  const Matrix& rv = raw.value();
  const std::size_t d = column_table.size();
  if (rv.cols() != d) {
    throw ShapeError("embedding: input " + rv.ShapeString() + " but schema has " +
                     std::to_string(d) + " columns");
  }
  if (tables.empty()) return raw;
  // Resolved slot per (row, categorical column); -1 marks numeric columns.
  std::vector<long> slot(rv.size(), -1);
  Matrix out = rv;
  for (std::size_t j = 0; j < d; ++j) {
    const int t = column_table[j];
    if (t < 0) continue;
    const Matrix& table = tables[static_cast<std::size_t>(t)].value;
    for (std::size_t i = 0; i < rv.rows(); ++i) {
      const Real code = rv(i, j);
      long idx = -1;
      if (code >= 0.0 && std::floor(code) == code &&
          code < static_cast<Real>(cardinality[j])) {
        idx = static_cast<long>(code);
      } else if (unknown_slot[j] && code >= 0.0 && std::floor(code) == code) {
        idx = static_cast<long>(cardinality[j]);
      } else {
        std::ostringstream msg;
        msg << "embedding: category index " << code << " at row " << i
            << " outside vocabulary of '" << tables[static_cast<std::size_t>(t)].name
            << "' (cardinality " << cardinality[j] << ")";
        throw std::out_of_range(msg.str());
      }
      slot[i * d + j] = idx;
      out(i, j) = table[static_cast<std::size_t>(idx)];
    }
  }
  std::vector<Var> parents{raw};
  for (auto& t : tables) parents.push_back(tape.Param(t));
  std::vector<std::size_t> ids;
  for (const Var& p : parents) ids.push_back(p.id());
  std::vector<int> col_table = column_table;
  return tape.Record(
      "embedding", std::move(out), std::move(parents),
      [ids = std::move(ids), slot = std::move(slot),
       col_table = std::move(col_table)](Tape& t, std::size_t self) {
        const Matrix& g = t.grad(self);
        const std::size_t cols = g.cols();
        if (t.requires_grad(ids[0])) {
          Matrix dr(g.rows(), cols);
          for (std::size_t i = 0; i < g.rows(); ++i)
            for (std::size_t j = 0; j < cols; ++j)
              if (col_table[j] < 0) dr(i, j) = g(i, j);
          t.AccumulateGrad(ids[0], dr);
        }
        for (std::size_t j = 0; j < cols; ++j) {
          if (col_table[j] < 0) continue;
          const std::size_t node = ids[1 + static_cast<std::size_t>(col_table[j])];
          Matrix& dt = t.MutableGrad(node);
          for (std::size_t i = 0; i < g.rows(); ++i)
            dt[static_cast<std::size_t>(slot[i * cols + j])] += g(i, j);
        }
      });
}

}  // namespace tabsel
