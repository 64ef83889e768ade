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

#ifndef TABSEL_INTERPRET_H_
#define TABSEL_INTERPRET_H_

#include <cstddef>
#include <string>
#include <vector>

#include "tabsel/dataset.h"
#include "tabsel/encoder.h"
#include "tabsel/matrix.h"

namespace tabsel {

// eta_b = sum_c max(d_bc, 0), one value per row (B x 1).
Matrix StepContribution(const Matrix& decision);

struct AggregateMask {
  Matrix weights;     // eta, B x steps
  Matrix aggregate;   // M_agg, B x D
  // Rows where every eta-weighted mask entry is zero; they get uniform rows.
  std::vector<bool> flagged;
};

// M_agg_bj = sum_i eta_b[i] M_bj[i] / sum_j sum_i eta_b[i] M_bj[i].
AggregateMask AggregateMasks(const MaskTrace& trace);

struct ImportanceReport {
  std::vector<std::string> feature_names;
  std::vector<Matrix> step_masks;  // B x D each
  Matrix step_weights;             // eta, B x steps
  Matrix aggregate;                // B x D
  std::vector<bool> flagged;
  std::vector<Real> global;        // column means of `aggregate`

  std::size_t rows() const { return aggregate.rows(); }
};

ImportanceReport MakeReport(const MaskTrace& trace,
                            std::vector<std::string> feature_names);

// Infer-mode masks for every row of `features`, processed in chunks.
ImportanceReport Explain(AttentiveModel& model, const Matrix& features,
                         std::size_t chunk_rows = 4096);

// Mean per-row mask entropy over steps, the sparsity regularizer's value.
Real MeanMaskEntropy(const MaskTrace& trace, Real eps = 1e-15);

// Delimited matrix with a header of column names; 17 significant digits.
void WriteMatrix(const std::string& path, const Matrix& m,
                 const std::vector<std::string>& header, char delimiter = ',');
Matrix ReadMatrix(const std::string& path, std::vector<std::string>* header = nullptr,
                  char delimiter = ',');

// Delimited export into `dir`: aggregate.csv, step<i>_mask.csv,
// step_weights.csv and global.csv (feature,importance).
void ExportDelimited(const ImportanceReport& report, const std::string& dir);
// Structured export: one JSON document with feature names and all matrices.
void ExportJson(const ImportanceReport& report, const std::string& path);
ImportanceReport ReadJson(const std::string& path);

}  // namespace tabsel

#endif  // TABSEL_INTERPRET_H_
