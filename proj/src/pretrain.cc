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

#include "tabsel/pretrain.h"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <random>
#include <stdexcept>

#include "tabsel/ops.h"

namespace tabsel {

Matrix SampleMask(std::size_t rows, std::size_t cols, Real p, Rng& rng) {
  if (!(p > 0.0 && p < 1.0))
    throw std::invalid_argument("mask probability must lie in (0, 1), got " + std::to_string(p));
  Matrix s(rows, cols);
  std::bernoulli_distribution draw(p);
  for (Real& v : s.values()) v = draw(rng) ? 1.0 : 0.0;
  return s;
}

std::vector<Real> ColumnNorms(const Matrix& f) {
  if (f.rows() < 2) throw std::invalid_argument("reconstruction loss needs at least 2 rows");
  std::vector<Real> mean(f.cols(), 0.0), norm(f.cols(), 0.0);
  for (std::size_t b = 0; b < f.rows(); ++b)
    for (std::size_t j = 0; j < f.cols(); ++j) mean[j] += f(b, j);
  for (Real& m : mean) m /= static_cast<Real>(f.rows());
  for (std::size_t b = 0; b < f.rows(); ++b)
    for (std::size_t j = 0; j < f.cols(); ++j) {
      const Real c = f(b, j) - mean[j];
      norm[j] += c * c;
    }
  for (Real& n : norm) n = n > 0.0 ? std::sqrt(n) : 1.0;
  return norm;
}

Real ReconstructionLoss(const Matrix& f_hat, const Matrix& f, const Matrix& mask) {
  RequireSameShape(f_hat, f, "reconstruction loss");
  RequireSameShape(f, mask, "reconstruction mask");
  const auto norm = ColumnNorms(f);
  Real total = 0.0;
  for (std::size_t b = 0; b < f.rows(); ++b)
    for (std::size_t j = 0; j < f.cols(); ++j) {
      const Real e = (f_hat(b, j) - f(b, j)) * mask(b, j) / norm[j];
      total += e * e;
    }
  return total;
}

Var ReconstructionLoss(Var f_hat, const Matrix& f, const Matrix& mask) {
  RequireSameShape(f_hat.value(), f, "reconstruction loss");
  RequireSameShape(f, mask, "reconstruction mask");
  const auto norm = ColumnNorms(f);
  const std::size_t ih = f_hat.id();
  return f_hat.tape().Record(
      "reconstruction_loss", Matrix(1, 1, ReconstructionLoss(f_hat.value(), f, mask)),
      {f_hat}, [ih, f, mask, norm](Tape& t, std::size_t self) {
        const Real g = t.grad(self)[0];
        const Matrix& fh = t.value(ih);
        Matrix d(fh.rows(), fh.cols());
        for (std::size_t b = 0; b < fh.rows(); ++b)
          for (std::size_t j = 0; j < fh.cols(); ++j) {
            const Real s = mask(b, j) / norm[j];
            d(b, j) = 2.0 * g * (fh(b, j) - f(b, j)) * s * s;
          }
        t.AccumulateGrad(ih, d);
      });
}

PretrainGraph PretrainForward(Tape& tape, AttentiveModel& model, FeatureDecoder& decoder,
                              const Matrix& raw, const Matrix& mask, Mode mode) {
  Var f = model.Embed(tape, tape.Constant(raw));
  RequireSameShape(f.value(), mask, "pretraining mask");
  Matrix keep(mask.rows(), mask.cols());
  for (std::size_t k = 0; k < keep.size(); ++k) keep[k] = 1.0 - mask[k];
  PretrainGraph g;
  g.encoder = model.Encode(tape, Mul(f, tape.Constant(keep)), keep, mode);
  g.reconstruction = decoder.Forward(tape, g.encoder.decisions, mask, mode);
  g.loss = ReconstructionLoss(g.reconstruction, f.value(), mask);
  return g;
}

PretrainResult Pretrain(AttentiveModel& model, FeatureDecoder& decoder, const Dataset& data,
                        const PretrainOptions& options) {
  std::string why;
  if (!data.schema.CompatibleWith(model.schema(), &why))
    throw std::invalid_argument("pretraining data does not match the model schema: " + why);
  if (decoder.num_features() != model.schema().num_features() ||
      decoder.config().n_d != model.config().n_d) {
    throw std::invalid_argument("decoder does not match the encoder (features or n_d)");
  }
  const ModelConfig& cfg = model.config();
  std::vector<Parameter*> params = model.encoder_parameters();
  for (Parameter* p : decoder.parameters()) params.push_back(p);
  Adam adam(params);
  BatchIterator batches(data, cfg.batch_size, /*shuffle=*/true, options.seed);
  // Mask draws use their own stream so batch order does not shift them.
  Rng mask_rng(options.seed ^ 0x5851f42d4c957f2dULL);

  PretrainResult result;
  for (std::size_t t = 0; t < options.max_iterations; ++t) {
    const auto batch = batches.Next();
    const Matrix mask = SampleMask(batch.features.rows(), batch.features.cols(),
                                   cfg.mask_probability, mask_rng);
    Tape tape;
    PretrainGraph g = PretrainForward(tape, model, decoder, batch.features, mask, Mode::kTrain);
    const Real loss = g.loss.value()[0];
    if (!std::isfinite(loss))
      throw NonFiniteError("pretraining loss is non-finite at iteration " + std::to_string(t));
    adam.ZeroGrad();
    tape.Backward(g.loss);
    adam.Step(options.schedule.At(t));
    result.loss_curve.emplace_back(t + 1, loss);
  }
  return result;
}

void WriteLossCurve(const std::string& path,
                    const std::vector<std::pair<std::size_t, Real>>& curve) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << std::setprecision(17) << "step,loss\n";
  for (const auto& [step, loss] : curve) out << step << "," << loss << "\n";
  if (!out) throw std::runtime_error("write failed for " + path);
}

std::vector<std::string> TransferIncompatibilities(const AttentiveModel& pretrained,
                                                   const FeatureSchema& schema,
                                                   const ModelConfig& config) {
  std::vector<std::string> diffs;
  const ModelConfig& src = pretrained.config();
  auto check = [&diffs](const char* field, auto a, auto b) {
    if (a != b) {
      diffs.push_back(std::string(field) + ": pretrained " + std::to_string(a) +
                      ", fine-tune " + std::to_string(b));
    }
  };
  check("num_features", pretrained.schema().num_features(), schema.num_features());
  check("n_d", src.n_d, config.n_d);
  check("n_a", src.n_a, config.n_a);
  check("n_steps", src.n_steps, config.n_steps);
  check("n_shared", src.n_shared, config.n_shared);
  check("n_step", src.n_step, config.n_step);
  if (src.activation != config.activation) diffs.push_back("activation differs");
  const auto& a = pretrained.schema().columns;
  const auto& b = schema.columns;
  for (std::size_t j = 0; j < std::min(a.size(), b.size()); ++j) {
    if (a[j].name != b[j].name)
      diffs.push_back("column " + std::to_string(j) + ": '" + a[j].name + "' vs '" + b[j].name + "'");
    if (a[j].kind != b[j].kind || a[j].table_size() != b[j].table_size())
      diffs.push_back("column '" + a[j].name + "': kind or cardinality differs");
  }
  return diffs;
}

AttentiveModel TransferEncoder(const AttentiveModel& pretrained, const ModelConfig& config,
                            std::uint64_t seed) {
  const auto diffs = TransferIncompatibilities(pretrained, pretrained.schema(), config);
  if (!diffs.empty()) {
    std::string msg = "cannot transfer encoder (pretrained config " +
                      pretrained.config().ToJson().dump() + ", fine-tune config " +
                      config.ToJson().dump() + "):";
    for (const auto& d : diffs) msg += "\n  " + d;
    throw std::invalid_argument(msg);
  }
  AttentiveModel source = pretrained;
  AttentiveModel model(source.schema(), config, seed);
  auto dst = model.encoder_parameters();
  auto src = source.encoder_parameters();
  for (std::size_t k = 0; k < dst.size(); ++k) {
    dst[k]->value = src[k]->value;
    dst[k]->ZeroGrad();
  }
  auto dst_stats = model.running_stats();
  auto src_stats = source.running_stats();
  for (std::size_t k = 0; k < dst_stats.size(); ++k) *dst_stats[k] = *src_stats[k];
  model.ResetHead(seed);
  return model;
}

}  // namespace tabsel
