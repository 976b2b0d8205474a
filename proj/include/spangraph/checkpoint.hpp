// Copyright 2026 The spangraph Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Checkpoint file layout:
//   line 1   JSON header: format_version, config, config_hash, labels,
//            vocab, step, dev_metrics, parameters [{name, rows, cols}]
//   rest     parameter values as raw float64 in header order, row-major,
//            native byte order

#ifndef SPANGRAPH_CHECKPOINT_HPP_
#define SPANGRAPH_CHECKPOINT_HPP_

#include <fstream>
#include <memory>
#include <string>

#include <json.hpp>

#include "spangraph/config.hpp"
#include "spangraph/model.hpp"

namespace spangraph {

struct CheckpointInfo {
  long step = 0;
  nlohmann::ordered_json dev_metrics = nlohmann::ordered_json::object();
};

inline void save_checkpoint(const std::string &path, const Model &model, const CheckpointInfo &info) {
  nlohmann::ordered_json h;
  h["format_version"] = kFormatVersion;
  h["config"] = model.config().to_json();
  h["config_hash"] = model.config().model_hash_hex();
  h["labels"] = {{"entity", model.labels().entity_types()}, {"relation", model.labels().relation_types()}};
  h["vocab"] = model.vocab().words();
  h["step"] = info.step;
  h["dev_metrics"] = info.dev_metrics;
  auto params = nlohmann::ordered_json::array();
  for (const auto &p : model.params().all()) {
    params.push_back({{"name", p.name}, {"rows", p.var.rows()}, {"cols", p.var.cols()}});
  }
  h["parameters"] = params;

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write checkpoint '" + path + "'");
  out << h.dump() << "\n";
  for (const auto &p : model.params().all()) {
    const Matrix &m = p.var.value();
    out.write(reinterpret_cast<const char *>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw IoError("failed while writing checkpoint '" + path + "'");
}

struct LoadedCheckpoint {
  std::unique_ptr<Model> model;
  CheckpointInfo info;
  nlohmann::json header;
};

inline nlohmann::json read_checkpoint_header(std::ifstream &in, const std::string &path) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("checkpoint '" + path + "' is empty");
  nlohmann::json h;
  try {
    h = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception &e) {
    throw ParseError("checkpoint '" + path + "': bad header: " + e.what());
  }
  if (!h.contains("format_version") || h["format_version"].get<int>() != kFormatVersion) {
    throw ValidationError("checkpoint '" + path + "' has an unsupported format version");
  }
  return h;
}

// Rebuilds the model stored at `path`. When `expected` is given its
// model-shaping keys must hash to the stored value unless
// `allow_mismatch`; the model then runs with `expected` (so decode-time
// keys such as the threshold can differ).
inline LoadedCheckpoint load_checkpoint(const std::string &path, const Config *expected = nullptr,
                                        bool allow_mismatch = false) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  LoadedCheckpoint out;
  out.header = read_checkpoint_header(in, path);
  const auto &h = out.header;
  Config stored = Config::from_json(h.at("config"));
  if (stored.model_hash_hex() != h.at("config_hash").get<std::string>()) {
    throw ValidationError("checkpoint '" + path + "': header config does not match its hash");
  }
  Config use = stored;
  if (expected) {
    if (expected->model_hash() != stored.model_hash() && !allow_mismatch) {
      throw ConfigError("config hash mismatch: checkpoint " + stored.model_hash_hex() + ", requested " +
                        expected->model_hash_hex() + " (pass --allow-config-mismatch to override)");
    }
    use = *expected;
  }
  LabelSchema labels(h.at("labels").at("entity").get<std::vector<std::string>>(),
                     h.at("labels").at("relation").get<std::vector<std::string>>());
  TokenVocab vocab = TokenVocab::from_words(h.at("vocab").get<std::vector<std::string>>());
  out.model = std::make_unique<Model>(use, labels, vocab, 0);
  out.info.step = h.at("step").get<long>();
  out.info.dev_metrics = h.at("dev_metrics");

  for (const auto &pj : h.at("parameters")) {
    const std::string name = pj.at("name").get<std::string>();
    const Index rows = pj.at("rows").get<Index>(), cols = pj.at("cols").get<Index>();
    Matrix m(rows, cols);
    in.read(reinterpret_cast<char *>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint '" + path + "' is truncated at parameter '" + name + "'");
    if (!out.model->params().contains(name)) {
      throw ValidationError("checkpoint parameter '" + name + "' has no counterpart in the model");
    }
    Var v = out.model->params().get(name);
    if (v.rows() != rows || v.cols() != cols) {
      throw ValidationError("checkpoint parameter '" + name + "' has shape " + std::to_string(rows) + "x" +
                            std::to_string(cols) + ", model expects " + std::to_string(v.rows()) + "x" +
                            std::to_string(v.cols()));
    }
    v.mutable_value() = m;
  }
  if (h.at("parameters").size() != out.model->params().all().size()) {
    throw ValidationError("checkpoint '" + path + "' does not cover every model parameter");
  }
  return out;
}

}  // namespace spangraph

#endif  // SPANGRAPH_CHECKPOINT_HPP_
