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

#ifndef SPANGRAPH_CONFIG_HPP_
#define SPANGRAPH_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spangraph/error.hpp"

namespace spangraph {

inline constexpr int kFormatVersion = 1;

enum class ValueType { kInt, kDouble, kBool, kString };

struct ConfigKey {
  std::string name;
  ValueType type;
  std::string default_value;
  std::vector<std::string> choices;  // non-empty for enumerations
  std::string help;
};

// Schema of every recognised key. Defaults reproduce the CoNLL04 column of
// the reference hyperparameter table.
inline const std::vector<ConfigKey> &config_schema() {
  static const std::vector<ConfigKey> schema = {
      {"data.max_span_width", ValueType::kInt, "12", {}, "maximum span width in tokens"},
      {"data.max_sentence_length", ValueType::kInt, "512", {}, "longer sentences are rejected"},
      {"encoder.backbone", ValueType::kString, "toy", {"toy", "adapter"}, "token encoder"},
      {"encoder.hidden_size", ValueType::kInt, "768", {}, "model width D (even)"},
      {"encoder.adapter_id", ValueType::kString, "", {}, "identifier handed to the adapter provider"},
      {"encoder.toy_vocab_size", ValueType::kInt, "30000", {}, "toy embedding table rows (incl. <unk>)"},
      {"encoder.heads", ValueType::kInt, "8", {}, "attention heads of the toy mixing layer"},
      {"graph.k_nodes", ValueType::kInt, "0", {}, "top-K nodes; 0 = sentence length"},
      {"graph.k_edges", ValueType::kInt, "0", {}, "top-K edges; 0 = sentence length"},
      {"graph.force_gold", ValueType::kBool, "false", {}, "inject reachable gold spans during training"},
      {"gt.backend", ValueType::kString, "transformer", {"transformer", "gcn", "gat", "sage"}, "structure learner"},
      {"gt.layers", ValueType::kInt, "2", {}, "structure learner depth"},
      {"gt.heads", ValueType::kInt, "8", {}, "graph transformer attention heads"},
      {"gt.ffn_multiplier", ValueType::kInt, "4", {}, "feed-forward width as a multiple of D"},
      {"gt.edge_features", ValueType::kBool, "false", {}, "add projected endpoint spans to edge tokens"},
      {"gt.freeze_identifiers", ValueType::kBool, "false", {}, "keep node identifiers fixed"},
      {"gt.pool_size", ValueType::kInt, "0", {}, "identifier pool rows; 0 = D/2"},
      {"gt.undirected_messages", ValueType::kBool, "false", {}, "message passing also along reversed edges"},
      {"decode.flat", ValueType::kBool, "true", {}, "greedy non-overlapping entity decoding"},
      {"decode.threshold", ValueType::kDouble, "0.5", {}, "keep iff probability strictly exceeds this"},
      {"loss.strict_paper", ValueType::kBool, "false", {}, "classification loss over kept elements only"},
      {"model.dropout", ValueType::kDouble, "0.1", {}, "dropout of feed-forward layers"},
      {"train.lr_backbone", ValueType::kDouble, "3e-5", {}, "encoder learning rate"},
      {"train.lr_others", ValueType::kDouble, "5e-5", {}, "learning rate of all other parameters"},
      {"train.weight_decay", ValueType::kDouble, "1e-4", {}, "decoupled weight decay"},
      {"train.warmup_steps", ValueType::kInt, "5000", {}, "linear warmup steps"},
      {"train.total_steps", ValueType::kInt, "50000", {}, "optimizer steps"},
      {"train.batch_size", ValueType::kInt, "8", {}, "sentences per step"},
      {"train.seed", ValueType::kInt, "42", {}, "global seed"},
      {"train.eval_every", ValueType::kInt, "1000", {}, "dev evaluation interval in steps; 0 = only at end"},
      {"train.clip_norm", ValueType::kDouble, "1.0", {}, "global gradient norm clip; 0 disables"},
  };
  return schema;
}

inline const ConfigKey *find_config_key(const std::string &name) {
  for (const auto &k : config_schema())
    if (k.name == name) return &k;
  return nullptr;
}

inline std::string valid_config_keys() {
  std::string out;
  for (const auto &k : config_schema()) {
    if (!out.empty()) out += ", ";
    out += k.name;
  }
  return out;
}

// Flat key/value configuration: defaults <- file <- overrides.
class Config {
 public:
  Config() {
    for (const auto &k : config_schema()) values_[k.name] = k.default_value;
  }

  void set(const std::string &key, const std::string &value) {
    const ConfigKey *k = find_config_key(key);
    if (!k) {
      throw ConfigError("unknown config key '" + key + "'; valid keys: " +
                        valid_config_keys());
    }
    check_value(*k, value);
    values_[key] = value;
  }

  // Reads `key = value` lines; blank lines and '#' comments are ignored.
  void load_file(const std::string &path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto trimmed = trim(line);
      if (trimmed.empty()) continue;
      auto eq = trimmed.find('=');
      if (eq == std::string::npos) {
        throw ConfigError(path + ":" + std::to_string(lineno) +
                          ": expected 'key = value'");
      }
      set(trim(trimmed.substr(0, eq)), trim(trimmed.substr(eq + 1)));
    }
  }

  const std::string &raw(const std::string &key) const {
    auto it = values_.find(key);
    if (it == values_.end()) throw ConfigError("unknown config key '" + key + "'");
    return it->second;
  }

  long long get_int(const std::string &key) const { return std::stoll(raw(key)); }
  double get_double(const std::string &key) const { return std::stod(raw(key)); }
  bool get_bool(const std::string &key) const { return parse_bool(raw(key)); }
  const std::string &get_string(const std::string &key) const { return raw(key); }

  void validate() const {
    const long long d = get_int("encoder.hidden_size");
    if (d <= 0 || d % 2 != 0) throw ConfigError("encoder.hidden_size must be positive and even");
    if (get_int("data.max_span_width") < 1) throw ConfigError("data.max_span_width must be >= 1");
    if (get_int("data.max_sentence_length") < 1) throw ConfigError("data.max_sentence_length must be >= 1");
    if (get_int("gt.layers") < 1) throw ConfigError("gt.layers must be >= 1");
    if (get_int("graph.k_nodes") < 0 || get_int("graph.k_edges") < 0)
      throw ConfigError("graph.k_nodes/graph.k_edges must be >= 0");
    const long long pool = get_int("gt.pool_size");
    if (pool < 0 || pool > d / 2)
      throw ConfigError("gt.pool_size must lie in [0, hidden_size/2] so identifiers can be orthonormal");
    if (get_double("train.lr_backbone") <= 0 || get_double("train.lr_others") <= 0)
      throw ConfigError("learning rates must be > 0");
    if (get_int("train.total_steps") < 1) throw ConfigError("train.total_steps must be >= 1");
    if (get_int("train.warmup_steps") < 0 || get_int("train.warmup_steps") > get_int("train.total_steps"))
      throw ConfigError("train.warmup_steps must lie in [0, train.total_steps]");
    if (get_int("train.batch_size") < 1) throw ConfigError("train.batch_size must be >= 1");
    const double p = get_double("model.dropout");
    if (p < 0.0 || p >= 1.0) throw ConfigError("model.dropout must lie in [0, 1)");
  }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto &k : config_schema()) {
      const auto &v = values_.at(k.name);
      switch (k.type) {
        case ValueType::kInt: j[k.name] = std::stoll(v); break;
        case ValueType::kDouble: j[k.name] = std::stod(v); break;
        case ValueType::kBool: j[k.name] = parse_bool(v); break;
        case ValueType::kString: j[k.name] = v; break;
      }
    }
    return j;
  }

  static Config from_json(const nlohmann::json &j) {
    Config c;
    for (auto it = j.begin(); it != j.end(); ++it) {
      const auto &v = it.value();
      if (v.is_string()) c.set(it.key(), v.get<std::string>());
      else if (v.is_boolean()) c.set(it.key(), v.get<bool>() ? "true" : "false");
      else if (v.is_number_integer()) c.set(it.key(), std::to_string(v.get<long long>()));
      else c.set(it.key(), format_double(v.get<double>()));
    }
    return c;
  }

  // FNV-1a over the keys that determine parameter shapes and semantics.
  std::uint64_t model_hash() const {
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const std::string &s) {
      for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
      }
    };
    for (const auto &k : config_schema()) {
      if (k.name.rfind("encoder.", 0) == 0 || k.name.rfind("gt.", 0) == 0 ||
          k.name == "data.max_span_width" || k.name == "data.max_sentence_length") {
        if (k.name == "gt.freeze_identifiers") continue;
        mix(k.name);
        mix("=");
        mix(canonical(k, values_.at(k.name)));
        mix(";");
      }
    }
    return h;
  }

  std::string model_hash_hex() const {
    std::ostringstream os;
    os << std::hex << model_hash();
    return os.str();
  }

  static bool parse_bool(const std::string &v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("expected boolean, got '" + v + "'");
  }

  static std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
  }

 private:
  static std::string trim(const std::string &s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  static std::string canonical(const ConfigKey &k, const std::string &v) {
    switch (k.type) {
      case ValueType::kInt: return std::to_string(std::stoll(v));
      case ValueType::kDouble: return format_double(std::stod(v));
      case ValueType::kBool: return parse_bool(v) ? "true" : "false";
      case ValueType::kString: return v;
    }
    return v;
  }

  static void check_value(const ConfigKey &k, const std::string &v) {
    try {
      std::size_t pos = 0;
      switch (k.type) {
        case ValueType::kInt:
          std::stoll(v, &pos);
          if (pos != v.size()) throw std::invalid_argument(v);
          break;
        case ValueType::kDouble:
          std::stod(v, &pos);
          if (pos != v.size()) throw std::invalid_argument(v);
          break;
        case ValueType::kBool: parse_bool(v); break;
        case ValueType::kString:
          if (!k.choices.empty()) {
            bool ok = false;
            for (const auto &c : k.choices) ok = ok || c == v;
            if (!ok) {
              std::string opts;
              for (const auto &c : k.choices) opts += (opts.empty() ? "" : "|") + c;
              throw ConfigError("invalid value '" + v + "' for " + k.name +
                                " (expected " + opts + ")");
            }
          }
          break;
      }
    } catch (const ConfigError &) {
      throw;
    } catch (const std::exception &) {
      throw ConfigError("invalid value '" + v + "' for " + k.name);
    }
  }

  std::map<std::string, std::string> values_;
};

}  // namespace spangraph

#endif  // SPANGRAPH_CONFIG_HPP_
