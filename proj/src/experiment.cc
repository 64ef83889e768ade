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

#include "tabsel/experiment.h"

#include <numeric>
#include <stdexcept>

#include "tabsel/synthetic.h"

namespace tabsel {

DataSplit LoadRunData(const RunConfig& config, bool require_target) {
  config.Validate();
  const std::array<Real, 3> fractions{config.GetReal("train_fraction"),
                                      config.GetReal("valid_fraction"),
                                      config.GetReal("test_fraction")};
  DataSplit split;
  if (!config.Get("synthetic").empty()) {
    const Dataset all = GenerateSynthetic(ParseSynKind(config.Get("synthetic")),
                                          config.GetCount("synthetic_rows"),
                                          config.GetSeed("synthetic_seed"));
    split = Split(all, fractions, config.GetSeed("split_seed"));
  } else {
    if (config.Get("data").empty()) throw ConfigError({"no data source: set data or synthetic"});
    if (config.Get("schema").empty()) throw ConfigError({"data requires a schema file"});
    FeatureSchema schema = FeatureSchema::Load(config.Get("schema"));
    LoadOptions options;
    options.delimiter = config.Get("delimiter")[0];
    options.mean_impute = config.GetBool("mean_impute");
    options.require_target = require_target;
    const Dataset all = LoadDelimited(config.Get("data"), schema, options);
    const bool explicit_parts = !config.Get("valid_data").empty() || !config.Get("test_data").empty();
    if (explicit_parts) {
      options.freeze_vocabulary = true;
      if (!config.Get("valid_data").empty()) {
        split.train = all;
        split.valid = LoadDelimited(config.Get("valid_data"), schema, options);
      } else {
        // Only a test file: carve validation rows out of the training file.
        const Real kept = fractions[0] + fractions[1];
        const DataSplit carved =
            Split(all, {fractions[0] / kept, fractions[1] / kept, 0.0},
                  config.GetSeed("split_seed"));
        split.train = carved.train;
        split.valid = carved.valid;
      }
      if (!config.Get("test_data").empty())
        split.test = LoadDelimited(config.Get("test_data"), schema, options);
      // Frozen loads can only map to known slots, so the schema is final here.
      split.train.schema = schema;
      split.valid.schema = schema;
      split.test.schema = schema;
    } else {
      split = Split(all, fractions, config.GetSeed("split_seed"));
    }
  }
  const std::size_t keep = config.GetCount("train_rows");
  if (keep > 0 && keep < split.train.rows()) {
    std::vector<std::size_t> idx(keep);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    split.train = split.train.Subset(idx);
  }
  return split;
}

}  // namespace tabsel
