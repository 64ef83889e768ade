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

#ifndef TABSEL_DATASET_H_
#define TABSEL_DATASET_H_

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "tabsel/layers.h"
#include "tabsel/matrix.h"
#include "tabsel/schema.h"

namespace tabsel {

// Parsed rows. Numeric features are stored as read; categorical features as
// category indices. Targets are class indices (n x 1) for classification and
// values (n x outputs) for regression.
struct Dataset {
  FeatureSchema schema;
  Matrix features;
  Matrix targets;

  std::size_t rows() const { return features.rows(); }
  Dataset Subset(std::span<const std::size_t> indices) const;
  std::vector<Real> target_column(std::size_t col = 0) const;
};

// Raised for malformed input files; the message names the line.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct LoadOptions {
  char delimiter = ',';
  // Replace missing numeric values with the column mean instead of failing.
  bool mean_impute = false;
  // When false, unseen category strings are appended to the vocabulary.
  // When true they map to the unknown slot, or fail without one.
  bool freeze_vocabulary = false;
  // Targets may be absent (unlabeled data); targets are then empty.
  bool require_target = true;
};

// Reads delimited text with a header row. Columns are matched to the schema
// by name. Interned vocabularies are written back into `schema`.
Dataset LoadDelimited(const std::string& path, FeatureSchema& schema,
                      const LoadOptions& options = {});

// Writes features and targets with a header row; categories and classes are
// written as their vocabulary strings when known. Values use 17 significant
// digits.
void WriteDelimited(const std::string& path, const Dataset& data,
                    char delimiter = ',');

struct DataSplit {
  Dataset train;
  Dataset valid;
  Dataset test;
};

// Seeded shuffle, then consecutive partitions of the given fractions.
DataSplit Split(const Dataset& data, std::array<Real, 3> fractions,
                std::uint64_t seed);

// Row indices of one epoch in batches of `batch_size`; the last batch may be
// short. Batch sizes below 2 are rejected; a batch size above the row count
// yields a single batch and a warning.
std::vector<std::vector<std::size_t>> EpochBatches(std::size_t rows,
                                                   std::size_t batch_size,
                                                   bool shuffle, Rng& rng);

// Endless batch stream over a dataset, reshuffling every epoch.
class BatchIterator {
 public:
  BatchIterator(const Dataset& data, std::size_t batch_size, bool shuffle,
                std::uint64_t seed);

  struct Batch {
    Matrix features;
    Matrix targets;
    std::vector<std::size_t> rows;
  };
  Batch Next();
  std::size_t epoch() const { return epoch_; }

 private:
  const Dataset* data_;
  std::size_t batch_size_;
  bool shuffle_;
  Rng rng_;
  std::vector<std::vector<std::size_t>> current_;
  std::size_t position_ = 0;
  std::size_t epoch_ = 0;
};

}  // namespace tabsel

#endif  // TABSEL_DATASET_H_
