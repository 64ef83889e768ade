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

#ifndef TABSEL_LAYERS_H_
#define TABSEL_LAYERS_H_

#include <cstddef>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "tabsel/matrix.h"
#include "tabsel/schema.h"
#include "tabsel/tape.h"

namespace tabsel {

using Rng = std::mt19937_64;

enum class Mode { kTrain, kInfer };

enum class BlockActivation { kGlu, kRelu };

// x * W + b. Weights are Glorot-uniform, bias starts at zero.
class FcLayer {
 public:
  FcLayer() = default;
  FcLayer(const std::string& name, std::size_t in, std::size_t out, Rng& rng);

  Var Forward(Tape& tape, Var x);

  std::size_t in() const { return weight.value.rows(); }
  std::size_t out() const { return weight.value.cols(); }

  Parameter weight;  // in x out
  Parameter bias;    // 1 x out
};

// Batch normalization over virtual sub-batches ("ghost" batches).
//
// In train mode the batch is cut into consecutive chunks of
// `virtual_batch_size` rows, each normalized with its own mean and biased
// variance. A trailing chunk of a single row is merged into the previous
// chunk. A virtual batch size of 0, or one larger than the batch, means one
// chunk covering the whole batch (the latter also warns once).
//
// Running statistics follow running = m * running + (1 - m) * s, where s is
// the mean of the per-chunk statistics of the step. Infer mode normalizes
// with the running statistics only and fails until one train step has run.
//
// Statistics live apart from the gain and shift so that a layer shared by
// several decision steps can keep one set per step: each step sees a
// different input distribution.
struct BnStats {
  std::string name;
  Matrix mean;         // 1 x d, starts at 0
  Matrix var;          // 1 x d, starts at 1
  bool ready = false;  // set by the first train step
};

class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(const std::string& name, std::size_t dim,
            std::size_t virtual_batch_size, Real momentum, Real epsilon = 1e-5);

  Var Forward(Tape& tape, Var x, Mode mode) { return Forward(tape, x, mode, stats); }
  // Normalizes with this layer's gain and shift and the given statistics.
  Var Forward(Tape& tape, Var x, Mode mode, BnStats& site);

  // Fresh statistics sized for this layer.
  BnStats NewStats(const std::string& name) const;

  // Row ranges [begin, end) used for a batch of `batch_rows` rows.
  static std::vector<std::pair<std::size_t, std::size_t>> VirtualBatches(
      std::size_t batch_rows, std::size_t virtual_batch_size);

  std::size_t dim() const { return gain.value.cols(); }

  Parameter gain;   // 1 x d, starts at 1
  Parameter shift;  // 1 x d, starts at 0
  BnStats stats;
  std::size_t virtual_batch_size = 0;
  Real momentum = 0.9;
  Real epsilon = 1e-5;

 private:
  bool warned_oversized_ = false;
};

// FC -> BN -> gated linear unit. Output width is half the FC width:
// h[:, :units] * sigmoid(h[:, units:]).
//
// With BlockActivation::kRelu the block is FC -> BN -> ReLU at width `units`
// instead (the GLU-free ablation).
class GluBlock {
 public:
  GluBlock() = default;
  GluBlock(const std::string& name, std::size_t in, std::size_t units,
           std::size_t virtual_batch_size, Real momentum, Rng& rng,
           BlockActivation activation = BlockActivation::kGlu);

  Var Forward(Tape& tape, Var x, Mode mode) { return Forward(tape, x, mode, bn.stats); }
  Var Forward(Tape& tape, Var x, Mode mode, BnStats& site);

  std::size_t units() const {
    return activation == BlockActivation::kGlu ? fc.out() / 2 : fc.out();
  }
  std::size_t in() const { return fc.in(); }

  FcLayer fc;
  BatchNorm bn;
  BlockActivation activation = BlockActivation::kGlu;
};

// One trainable scalar per category of each categorical column.
class EmbeddingTable {
 public:
  EmbeddingTable() = default;
  EmbeddingTable(const FeatureSchema& schema, Rng& rng);

  // `raw` holds numeric values and category indices (as reals) column by
  // column per the schema. Numeric columns pass through; categorical ones
  // are replaced by their looked-up scalar. Gradients reach the looked-up
  // table slots and the numeric entries of `raw`.
  Var Embed(Tape& tape, Var raw);

  // Table for column j, or nullptr for numeric columns.
  Parameter* table_for(std::size_t column);
  std::vector<Parameter*> parameters();

  std::vector<Parameter> tables;
  // Per schema column: index into `tables`, or -1 for numeric columns.
  std::vector<int> column_table;
  // Per schema column: declared cardinality and unknown-slot flag.
  std::vector<std::size_t> cardinality;
  std::vector<bool> unknown_slot;
};

// Glorot-uniform matrix: entries from U(-sqrt(6/(in+out)), +sqrt(6/(in+out))).
Matrix GlorotUniform(std::size_t in, std::size_t out, Rng& rng);

}  // namespace tabsel

#endif  // TABSEL_LAYERS_H_
