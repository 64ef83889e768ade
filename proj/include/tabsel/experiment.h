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

#ifndef TABSEL_EXPERIMENT_H_
#define TABSEL_EXPERIMENT_H_

#include "tabsel/dataset.h"
#include "tabsel/run_config.h"

namespace tabsel {

// Train/valid/test data described by a run configuration: either a
// synthetic generator or a delimited file with a schema sidecar. Without
// explicit valid/test files the data is split by the configured fractions.
// A nonzero train_rows keeps only that many training rows.
DataSplit LoadRunData(const RunConfig& config, bool require_target = true);

}  // namespace tabsel

#endif  // TABSEL_EXPERIMENT_H_
