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

#ifndef TABSEL_CHECKPOINT_H_
#define TABSEL_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tabsel/matrix.h"

namespace tabsel {

class AttentiveModel;
class FeatureDecoder;

inline constexpr std::uint32_t kCheckpointFormatVersion = 1;

// Raw checkpoint contents: a JSON header plus named matrices.
//
// File layout (all integers little-endian):
//   8 bytes   magic "TBSLCKPT"
//   u32       format version
//   u64       header length H
//   H bytes   UTF-8 JSON header; header["tensors"] lists {name, rows, cols}
//             in storage order
//   ...       for each tensor, rows*cols IEEE-754 binary64 values, row-major
struct CheckpointData {
  nlohmann::json meta = nlohmann::json::object();
  std::vector<std::pair<std::string, Matrix>> tensors;

  const Matrix& Get(const std::string& name) const;
  bool Has(const std::string& name) const;
};

void WriteCheckpoint(const std::string& path, const CheckpointData& data);
CheckpointData ReadCheckpoint(const std::string& path);

// Model (and optional decoder) <-> checkpoint. Stored: config, schema, every
// parameter, and every batch norm's running statistics.
CheckpointData ToCheckpoint(AttentiveModel& model,
                            FeatureDecoder* decoder = nullptr);
AttentiveModel ModelFromCheckpoint(const CheckpointData& data);
// Throws if the checkpoint holds no decoder.
FeatureDecoder DecoderFromCheckpoint(const CheckpointData& data);

void SaveModel(const std::string& path, AttentiveModel& model,
               FeatureDecoder* decoder = nullptr);
AttentiveModel LoadModel(const std::string& path);

}  // namespace tabsel

#endif  // TABSEL_CHECKPOINT_H_
