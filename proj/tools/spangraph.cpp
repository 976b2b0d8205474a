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

// Command-line front end. Configuration precedence: built-in defaults, then
// --config FILE, then dotted flags such as --gt.backend gcn.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "spangraph/spangraph.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace spangraph;

namespace {

struct Overrides {
  std::vector<std::pair<std::string, std::string>> values;
};

// Pulls "--a.b value", "--a.b=value" and the --steps/--warmup aliases out
// of argv; everything else is left for CLI11.
std::vector<std::string> extract_overrides(int argc, char **argv, Overrides &ov) {
  std::vector<std::string> rest;
  for (int i = 1; i < argc; ++i) {
    std::string a = argv[i];
    if (a.rfind("--", 0) != 0) {
      rest.push_back(a);
      continue;
    }
    std::string key = a.substr(2), value;
    const auto eq = key.find('=');
    bool inline_value = eq != std::string::npos;
    if (inline_value) {
      value = key.substr(eq + 1);
      key = key.substr(0, eq);
    }
    if (key == "steps") key = "train.total_steps";
    else if (key == "warmup") key = "train.warmup_steps";
    if (key.find('.') == std::string::npos) {
      rest.push_back(a);
      continue;
    }
    if (!inline_value) {
      if (i + 1 >= argc) throw ConfigError("flag --" + key + " needs a value");
      value = argv[++i];
    }
    ov.values.emplace_back(key, value);
  }
  return rest;
}

struct Common {
  std::string config_file;
  long long seed = -1;
  std::string out = "out";
};

void add_common(CLI::App *cmd, Common &c) {
  cmd->add_option("--config", c.config_file, "Config file (key = value lines)");
  cmd->add_option("--seed", c.seed, "Random seed (overrides train.seed)");
  cmd->add_option("--out", c.out, "Output directory")->capture_default_str();
}

void apply(Config &cfg, const Common &c, const Overrides &ov) {
  if (!c.config_file.empty()) cfg.load_file(c.config_file);
  for (const auto &[k, v] : ov.values) cfg.set(k, v);
  if (c.seed >= 0) cfg.set("train.seed", std::to_string(c.seed));
  cfg.validate();
}

json run_config(const std::string &command, const Config &cfg, const Common &c) {
  json j;
  j["command"] = command;
  j["config"] = cfg.to_json();
  j["config_hash"] = cfg.model_hash_hex();
  j["seed"] = cfg.get_int("train.seed");
  j["out"] = c.out;
  return j;
}

json artifact(const json &rc) {
  json j;
  j["format_version"] = kFormatVersion;
  j["run_config"] = rc;
  return j;
}

void write_text(const fs::path &p, const std::string &text) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + p.string() + "'");
  out << text;
}

fs::path ensure_dir(const std::string &dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
  return fs::path(dir);
}

std::vector<std::string> split_tokens(const std::string &s) {
  std::istringstream in(s);
  std::vector<std::string> out;
  for (std::string w; in >> w;) out.push_back(w);
  if (out.empty()) throw ValidationError("--tokens is empty");
  return out;
}

std::vector<Sentence> load_optional(const std::string &dir, const std::string &split, int max_len) {
  if (!fs::exists(corpus_path(dir, split))) return {};
  return load_corpus(dir, split, max_len);
}

json prediction_json(const Prediction &p) {
  json j = sentence_to_json(p.graph);
  j["entity_keep"] = p.entity_keep;
  j["relation_keep"] = p.relation_keep;
  return j;
}

// Checkpoint config, then the file and flag layers on top.
Config checkpoint_config(const std::string &path, const Common &c, const Overrides &ov) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path + "'");
  Config cfg = Config::from_json(read_checkpoint_header(in, path).at("config"));
  apply(cfg, c, ov);
  return cfg;
}

struct TrainOutcome {
  TrainResult result;
  fs::path checkpoint;
};

TrainOutcome train_into(const Config &cfg, const std::vector<Sentence> &train, const std::vector<Sentence> &dev,
                        const fs::path &dir, const json &rc) {
  const LabelSchema labels = LabelSchema::from_corpus(train);
  labels.check_corpus(dev);
  const TokenVocab vocab =
      TokenVocab::from_corpus(train, static_cast<std::size_t>(cfg.get_int("encoder.toy_vocab_size")));
  Model model(cfg, labels, vocab, static_cast<std::uint64_t>(cfg.get_int("train.seed")));
  Trainer trainer(model, TrainSettings::from_config(cfg));
  std::ofstream log(dir / "train_log.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw IoError("cannot write training log in '" + dir.string() + "'");
  log << artifact(rc).dump() << "\n";
  TrainOutcome out;
  out.checkpoint = dir / "model.ckpt";
  try {
    out.result = trainer.train(train, dev, &log, out.checkpoint.string());
  } catch (const NumericError &e) {
    json d = artifact(rc);
    d["error"] = e.what();
    write_text(dir / "diagnostic.json", d.dump(2) + "\n");
    throw;
  }
  return out;
}

int cmd_train(const Common &c, const Overrides &ov, const std::string &data) {
  Config cfg;
  apply(cfg, c, ov);
  const int max_len = static_cast<int>(cfg.get_int("data.max_sentence_length"));
  const auto train = load_corpus(data, "train", max_len);
  const auto dev = load_optional(data, "dev", max_len);
  const fs::path dir = ensure_dir(c.out);
  const json rc = run_config("train", cfg, c);
  write_text(dir / "run_config.json", artifact(rc).dump(2) + "\n");
  TrainOutcome t = train_into(cfg, train, dev, dir, rc);
  json rep = artifact(rc);
  rep["checkpoint"] = t.checkpoint.string();
  rep["steps"] = t.result.log.empty() ? 0 : t.result.log.back().step;
  rep["final_loss"] = t.result.log.empty() ? 0.0 : t.result.log.back().l_total;
  if (t.result.evaluated) {
    rep["best_step"] = t.result.best_step;
    rep["dev"] = report_json(t.result.best_dev);
    std::cout << report_table(t.result.best_dev);
  }
  write_text(dir / "dev_report.json", rep.dump(2) + "\n");
  std::cout << "checkpoint: " << t.checkpoint.string() << "\n";
  return 0;
}

int cmd_eval(const Common &c, const Overrides &ov, const std::string &ckpt, const std::string &data,
             const std::string &split, const std::string &corpus_file, bool confusion, bool allow_mismatch) {
  const Config cfg = checkpoint_config(ckpt, c, ov);
  LoadedCheckpoint lc = load_checkpoint(ckpt, &cfg, allow_mismatch);
  const int max_len = static_cast<int>(cfg.get_int("data.max_sentence_length"));
  std::vector<Sentence> gold;
  if (!corpus_file.empty()) gold = read_corpus_file(corpus_file, max_len);
  else if (!data.empty()) gold = load_corpus(data, split, max_len);
  else throw ValidationError("eval needs --data DIR or --corpus FILE");
  const Evaluation ev = evaluate_model(*lc.model, gold);

  const fs::path dir = ensure_dir(c.out);
  const json rc = run_config("eval", cfg, c);
  json rep = artifact(rc);
  rep["checkpoint"] = ckpt;
  rep["metrics"] = report_json(ev.report);
  write_text(dir / "report.json", rep.dump(2) + "\n");
  write_text(dir / "report.txt", report_table(ev.report));
  std::cout << report_table(ev.report);
  if (confusion) {
    const ConfusionReport cr = confusion_and_errors(ev.predictions, gold);
    const std::string header = "# format_version=" + std::to_string(kFormatVersion) + " run_config=" + rc.dump() + "\n";
    write_text(dir / "confusion_entities.csv", header + confusion_csv(cr.entities));
    write_text(dir / "confusion_relations.csv", header + confusion_csv(cr.relations));
    json cj = artifact(rc);
    cj["entities"] = confusion_json(cr.entities);
    cj["relations"] = confusion_json(cr.relations);
    cj["entity_errors"] = {{"wrong_type", cr.entity_errors.wrong_type},
                           {"boundary", cr.entity_errors.boundary},
                           {"spurious", cr.entity_errors.spurious},
                           {"missed", cr.entity_errors.missed}};
    write_text(dir / "confusion.json", cj.dump(2) + "\n");
    write_text(dir / "confusion.svg",
               render_heatmaps_svg({confusion_heatmap(cr.entities, "entities (gold rows, predicted columns)"),
                                    confusion_heatmap(cr.relations, "relations (gold rows, predicted columns)")}));
  }
  return 0;
}

int cmd_predict(const Common &c, const Overrides &ov, const std::string &ckpt, const std::string &input,
                const std::string &tokens, bool allow_mismatch, bool dump_graph) {
  const Config cfg = checkpoint_config(ckpt, c, ov);
  LoadedCheckpoint lc = load_checkpoint(ckpt, &cfg, allow_mismatch);
  const int max_len = static_cast<int>(cfg.get_int("data.max_sentence_length"));
  std::vector<Sentence> sentences;
  if (!tokens.empty()) {
    Sentence s;
    s.id = "input";
    s.tokens = split_tokens(tokens);
    validate_sentence(s, "--tokens", max_len);
    sentences.push_back(s);
  } else if (!input.empty()) {
    sentences = read_corpus_file(input, max_len);
  } else {
    throw ValidationError("predict needs --input FILE or --tokens \"...\"");
  }
  json out = artifact(run_config("predict", cfg, c));
  auto preds = json::array();
  auto graphs = json::array();
  for (const auto &s : sentences) {
    ag::NoGradGuard no_grad;
    const ForwardResult r = lc.model->forward(s, {});
    preds.push_back(prediction_json(lc.model->decode(s, r)));
    if (dump_graph) {
      json g = graph_to_json(r.graph(), s);
      g["sentence"] = s.id;
      graphs.push_back(g);
    }
  }
  out["predictions"] = preds;
  const fs::path dir = ensure_dir(c.out);
  if (dump_graph) {
    json gj = artifact(run_config("predict", cfg, c));
    gj["graphs"] = graphs;
    write_text(dir / "initial_graphs.json", gj.dump(2) + "\n");
  }
  write_text(dir / "predictions.json", out.dump(2) + "\n");
  std::cout << preds.dump(2) << "\n";
  return 0;
}

int cmd_ablate(const Common &c, const Overrides &ov, const std::string &data) {
  Config base;
  apply(base, c, ov);
  const int max_len = static_cast<int>(base.get_int("data.max_sentence_length"));
  const auto train = load_corpus(data, "train", max_len);
  const auto dev = load_optional(data, "dev", max_len);
  auto test = load_optional(data, "test", max_len);
  const std::string eval_split = test.empty() ? "dev" : "test";
  if (test.empty()) test = dev;
  if (test.empty()) throw ValidationError("ablate needs a dev or test split in '" + data + "'");
  const fs::path dir = ensure_dir(c.out);

  const std::vector<std::pair<std::string, std::string>> backends = {
      {"transformer", "Trans"}, {"gcn", "GCN"}, {"gat", "GAT"}, {"sage", "SAGE"}};
  json out = artifact(run_config("ablate", base, c));
  out["eval_split"] = eval_split;
  auto rows = json::array();
  std::ostringstream table;
  table << std::fixed << std::setprecision(4) << "backend  ENT     REL     REL+\n";
  for (const auto &[backend, name] : backends) {
    Config cfg = base;
    cfg.set("gt.backend", backend);
    const fs::path sub = ensure_dir((dir / backend).string());
    Common cc = c;
    cc.out = sub.string();
    TrainOutcome t = train_into(cfg, train, dev, sub, run_config("ablate", cfg, cc));
    LoadedCheckpoint lc = load_checkpoint(t.checkpoint.string(), &cfg);
    const Evaluation ev = evaluate_model(*lc.model, test);
    json r;
    r["backend"] = name;
    r["metrics"] = report_json(ev.report);
    rows.push_back(r);
    table << std::left << std::setw(9) << name << std::setw(8) << ev.report.ent_prf().f1 << std::setw(8)
          << ev.report.rel_prf().f1 << ev.report.rel_plus_prf().f1 << "\n";
  }
  out["results"] = rows;
  write_text(dir / "ablation.json", out.dump(2) + "\n");
  write_text(dir / "ablation.txt", table.str());
  std::cout << table.str();
  return 0;
}

int cmd_convert(const Common &c, const std::string &input, const std::string &output) {
  std::ifstream in(input);
  if (!in) throw IoError("cannot open '" + input + "'");
  const auto corpus = convert_nested_stream(in, input);
  const std::string dst = output.empty() ? (ensure_dir(c.out) / "converted.jsonl").string() : output;
  write_corpus_file(dst, corpus);
  std::cout << "wrote " << corpus.size() << " sentences to " << dst << "\n";
  return 0;
}

int cmd_inspect(const Common &c, const Overrides &ov, const std::string &ckpt, const std::string &input, int index,
                const std::string &tokens, int top_n, bool allow_mismatch) {
  const Config cfg = checkpoint_config(ckpt, c, ov);
  LoadedCheckpoint lc = load_checkpoint(ckpt, &cfg, allow_mismatch);
  const int max_len = static_cast<int>(cfg.get_int("data.max_sentence_length"));
  Sentence s;
  if (!tokens.empty()) {
    s.id = "input";
    s.tokens = split_tokens(tokens);
    validate_sentence(s, "--tokens", max_len);
  } else if (!input.empty()) {
    const auto corpus = read_corpus_file(input, max_len);
    if (index < 0 || index >= static_cast<int>(corpus.size())) {
      throw ValidationError("--index " + std::to_string(index) + " is outside the corpus");
    }
    s = corpus[static_cast<std::size_t>(index)];
  } else {
    throw ValidationError("inspect-attention needs --tokens or --input FILE");
  }
  AttentionArtifact art = emit_attention(*lc.model, s, top_n);
  json out = artifact(run_config("inspect-attention", cfg, c));
  for (auto it = art.record.begin(); it != art.record.end(); ++it) out[it.key()] = it.value();
  const fs::path dir = ensure_dir(c.out);
  write_text(dir / "attention.json", out.dump() + "\n");
  write_text(dir / "attention.svg", art.svg);
  std::cout << "wrote " << (dir / "attention.json").string() << " and " << (dir / "attention.svg").string() << "\n";
  return 0;
}

int cmd_make_synthetic(const Common &c, const std::string &kind, int n_train, int n_dev, int n_test) {
  const auto k = synthetic::parse_kind(kind);
  const std::uint64_t seed = c.seed >= 0 ? static_cast<std::uint64_t>(c.seed) : 42;
  const fs::path dir = ensure_dir(c.out);
  const std::vector<std::pair<std::string, int>> splits = {{"train", n_train}, {"dev", n_dev}, {"test", n_test}};
  for (std::size_t i = 0; i < splits.size(); ++i) {
    if (splits[i].second <= 0) continue;
    write_corpus_file((dir / (splits[i].first + ".jsonl")).string(),
                      synthetic::generate(splits[i].second, seed + i, k, splits[i].first));
  }
  std::cout << "wrote synthetic " << kind << " corpus to " << dir.string() << "\n";
  return 0;
}

void print_error(const std::string &kind, const std::string &message) {
  json e;
  e["error"] = kind;
  e["message"] = message;
  std::cerr << e.dump() << "\n";
}

}  // namespace

int main(int argc, char **argv) {
  try {
    Overrides ov;
    std::vector<std::string> rest = extract_overrides(argc, argv, ov);

    CLI::App app{"Joint entity and relation extraction with graph structure learning"};
    app.require_subcommand(1);
    Common common;
    std::string data, ckpt, split = "dev", corpus_file, input, output, tokens, kind = "basic";
    bool confusion = false, allow_mismatch = false, dump_graph = false;
    int top_n = 3, index = 0, n_train = 200, n_dev = 50, n_test = 50;

    auto *train = app.add_subcommand("train", "Train a model");
    add_common(train, common);
    train->add_option("--data", data, "Directory with train.jsonl (and optional dev.jsonl)")->required();

    auto *eval = app.add_subcommand("eval", "Score a checkpoint on a corpus");
    add_common(eval, common);
    eval->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
    eval->add_option("--data", data, "Corpus directory");
    eval->add_option("--split", split, "Split inside --data")->capture_default_str();
    eval->add_option("--corpus", corpus_file, "Corpus file (JSON lines)");
    eval->add_flag("--confusion", confusion, "Also write confusion matrices");
    eval->add_flag("--allow-config-mismatch", allow_mismatch, "Accept a config whose hash differs");

    auto *predict = app.add_subcommand("predict", "Extract entities and relations");
    add_common(predict, common);
    predict->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
    predict->add_option("--input", input, "Sentences as JSON lines");
    predict->add_option("--tokens", tokens, "One whitespace-tokenized sentence");
    predict->add_flag("--allow-config-mismatch", allow_mismatch, "Accept a config whose hash differs");
    predict->add_flag("--dump-graph", dump_graph, "Also write the candidate graphs to initial_graphs.json");

    auto *ablate = app.add_subcommand("ablate", "Train and compare all structure-learner backends");
    add_common(ablate, common);
    ablate->add_option("--data", data, "Corpus directory")->required();

    auto *convert = app.add_subcommand("convert", "Convert document-level JSON lines to sentences");
    add_common(convert, common);
    convert->add_option("--input", input, "Source file")->required();
    convert->add_option("--output", output, "Destination file (default <out>/converted.jsonl)");

    auto *inspect = app.add_subcommand("inspect-attention", "Dump graph-transformer attention maps");
    add_common(inspect, common);
    inspect->add_option("--checkpoint", ckpt, "Checkpoint file")->required();
    inspect->add_option("--input", input, "Corpus file");
    inspect->add_option("--index", index, "Sentence index in --input")->capture_default_str();
    inspect->add_option("--tokens", tokens, "One whitespace-tokenized sentence");
    inspect->add_option("--top-n", top_n, "Nodes and edges shown")->capture_default_str();
    inspect->add_flag("--allow-config-mismatch", allow_mismatch, "Accept a config whose hash differs");

    auto *synth = app.add_subcommand("make-synthetic", "Write a seeded synthetic corpus");
    add_common(synth, common);
    synth->add_option("--kind", kind, "basic | compositional")->capture_default_str();
    synth->add_option("--train", n_train, "Training sentences")->capture_default_str();
    synth->add_option("--dev", n_dev, "Dev sentences")->capture_default_str();
    synth->add_option("--test", n_test, "Test sentences")->capture_default_str();

    std::vector<std::string> args(rest.rbegin(), rest.rend());
    try {
      app.parse(args);
    } catch (const CLI::CallForHelp &e) {
      return app.exit(e);
    } catch (const CLI::CallForAllHelp &e) {
      return app.exit(e);
    } catch (const CLI::ParseError &e) {
      print_error("usage_error", e.what());
      return 2;
    }

    if (*train) return cmd_train(common, ov, data);
    if (*eval) return cmd_eval(common, ov, ckpt, data, split, corpus_file, confusion, allow_mismatch);
    if (*predict) return cmd_predict(common, ov, ckpt, input, tokens, allow_mismatch, dump_graph);
    if (*ablate) return cmd_ablate(common, ov, data);
    if (*convert) return cmd_convert(common, input, output);
    if (*inspect) return cmd_inspect(common, ov, ckpt, input, index, tokens, top_n, allow_mismatch);
    if (*synth) return cmd_make_synthetic(common, kind, n_train, n_dev, n_test);
    return 1;
  } catch (const Error &e) {
    print_error(e.kind(), e.what());
  } catch (const std::exception &e) {
    print_error("internal_error", e.what());
  }
  return 1;
}
