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

#include "tabsel/checkpoint.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include "tabsel/decoder.h"
#include "tabsel/encoder.h"

namespace tabsel {

namespace {

constexpr char kMagic[8] = {'T', 'B', 'S', 'L', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

template <typename T>
void WriteRaw(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T ReadRaw(std::ifstream& in, const std::string& path) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T)))
    throw std::runtime_error(path + ": truncated checkpoint");
  return v;
}

void AddStats(CheckpointData& data, const std::vector<BnStats*>& sites,
              nlohmann::json& trained) {
  for (const BnStats* st : sites) {
    data.tensors.emplace_back(st->name + ".running_mean", st->mean);
    data.tensors.emplace_back(st->name + ".running_var", st->var);
    if (st->ready) trained.push_back(st->name);
  }
}

void LoadInto(const CheckpointData& data, const std::vector<Parameter*>& params,
              const std::vector<BnStats*>& sites, const nlohmann::json& trained) {
  auto load = [&data](const std::string& name, Matrix& dst) {
    const Matrix& m = data.Get(name);
    if (!m.SameShape(dst)) {
      throw ShapeError("checkpoint tensor '" + name + "' is " + m.ShapeString() +
                       ", model expects " + dst.ShapeString());
    }
    dst = m;
  };
  for (Parameter* p : params) {
    load(p->name, p->value);
    p->ZeroGrad();
  }
  for (BnStats* st : sites) {
    load(st->name + ".running_mean", st->mean);
    load(st->name + ".running_var", st->var);
    st->ready = false;
    for (const auto& t : trained)
      if (t.get<std::string>() == st->name) st->ready = true;
  }
}

}  // namespace

const Matrix& CheckpointData::Get(const std::string& name) const {
  for (const auto& [n, m] : tensors)
    if (n == name) return m;
  throw std::out_of_range("checkpoint has no tensor '" + name + "'");
}

bool CheckpointData::Has(const std::string& name) const {
  for (const auto& t : tensors)
    if (t.first == name) return true;
  return false;
}

void WriteCheckpoint(const std::string& path, const CheckpointData& data) {
  nlohmann::json header = data.meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto& [name, m] : data.tensors)
    header["tensors"].push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  const std::string text = header.dump();
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.write(kMagic, sizeof(kMagic));
  WriteRaw(out, kCheckpointFormatVersion);
  WriteRaw(out, static_cast<std::uint64_t>(text.size()));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& t : data.tensors) {
    out.write(reinterpret_cast<const char*>(t.second.data()),
              static_cast<std::streamsize>(t.second.size() * sizeof(Real)));
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

CheckpointData ReadCheckpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  char magic[8];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw std::runtime_error(path + ": not a tabsel checkpoint");
  const auto version = ReadRaw<std::uint32_t>(in, path);
  if (version != kCheckpointFormatVersion) {
    throw std::runtime_error(path + ": checkpoint format version " + std::to_string(version) +
                             ", this build reads version " +
                             std::to_string(kCheckpointFormatVersion));
  }
  const auto length = ReadRaw<std::uint64_t>(in, path);
  std::string text(length, '\0');
  if (!in.read(text.data(), static_cast<std::streamsize>(length)))
    throw std::runtime_error(path + ": truncated checkpoint header");
  CheckpointData data;
  data.meta = nlohmann::json::parse(text);
  const nlohmann::json tensors = data.meta.at("tensors");
  data.meta.erase("tensors");
  for (const auto& t : tensors) {
    Matrix m(t.at("rows").get<std::size_t>(), t.at("cols").get<std::size_t>());
    if (!in.read(reinterpret_cast<char*>(m.data()),
                 static_cast<std::streamsize>(m.size() * sizeof(Real))))
      throw std::runtime_error(path + ": truncated tensor data");
    data.tensors.emplace_back(t.at("name").get<std::string>(), std::move(m));
  }
  return data;
}

CheckpointData ToCheckpoint(AttentiveModel& model, FeatureDecoder* decoder) {
  CheckpointData data;
  data.meta["config"] = model.config().ToJson();
  data.meta["schema"] = model.schema().ToJson();
  nlohmann::json trained = nlohmann::json::array();
  for (Parameter* p : model.parameters()) data.tensors.emplace_back(p->name, p->value);
  AddStats(data, model.running_stats(), trained);
  if (decoder != nullptr) {
    data.meta["decoder"] = {{"config", decoder->config().ToJson()},
                            {"num_features", decoder->num_features()}};
    for (Parameter* p : decoder->parameters()) data.tensors.emplace_back(p->name, p->value);
    AddStats(data, decoder->running_stats(), trained);
  }
  data.meta["trained_batch_norms"] = trained;
  return data;
}

AttentiveModel ModelFromCheckpoint(const CheckpointData& data) {
  AttentiveModel model(FeatureSchema::FromJson(data.meta.at("schema")),
                    ModelConfig::FromJson(data.meta.at("config")), 0);
  LoadInto(data, model.parameters(), model.running_stats(),
           data.meta.value("trained_batch_norms", nlohmann::json::array()));
  return model;
}

FeatureDecoder DecoderFromCheckpoint(const CheckpointData& data) {
  if (!data.meta.contains("decoder")) throw std::runtime_error("checkpoint holds no decoder");
  const auto& d = data.meta.at("decoder");
  FeatureDecoder decoder(ModelConfig::FromJson(d.at("config")),
                        d.at("num_features").get<std::size_t>(), 0);
  LoadInto(data, decoder.parameters(), decoder.running_stats(),
           data.meta.value("trained_batch_norms", nlohmann::json::array()));
  return decoder;
}

void SaveModel(const std::string& path, AttentiveModel& model, FeatureDecoder* decoder) {
  WriteCheckpoint(path, ToCheckpoint(model, decoder));
}

AttentiveModel LoadModel(const std::string& path) {
  return ModelFromCheckpoint(ReadCheckpoint(path));
}

}  // namespace tabsel
