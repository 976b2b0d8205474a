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

// Corpus ingestion and the gold graph. Sentences are stored one JSON object
// per line:
//
//   {"tokens": [...], "entities": [[start, end, type]],
//    "relations": [[head_entity, tail_entity, type]], "id": "..."}
//
// Span ends are inclusive token indices.

#ifndef SPANGRAPH_CORPUS_HPP_
#define SPANGRAPH_CORPUS_HPP_

#include <algorithm>
#include <compare>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "spangraph/error.hpp"

namespace spangraph {

struct Span {
  int start = 0;
  int end = 0;  // inclusive

  int width() const { return end - start + 1; }
  bool overlaps(const Span &o) const { return start <= o.end && o.start <= end; }
  auto operator<=>(const Span &) const = default;
};

struct Entity {
  Span span;
  std::string type;
  bool operator==(const Entity &) const = default;
};

struct Relation {
  int head = 0;  // index into Sentence::entities
  int tail = 0;
  std::string type;
  bool operator==(const Relation &) const = default;
};

struct Sentence {
  std::string id;
  std::vector<std::string> tokens;
  std::vector<Entity> entities;
  std::vector<Relation> relations;

  int length() const { return static_cast<int>(tokens.size()); }
  bool operator==(const Sentence &) const = default;
};

inline constexpr const char *kNonEntity = "non-entity";
inline constexpr const char *kNoRelation = "no-relation";
inline constexpr int kDefaultMaxSentenceLength = 512;

// Checks the structural invariants of a sentence; `where` names the record.
inline void validate_sentence(const Sentence &s, const std::string &where,
                              int max_length = kDefaultMaxSentenceLength) {
  const int n = s.length();
  if (n == 0) throw ValidationError(where + ": sentence has no tokens");
  if (n > max_length) {
    throw ValidationError(where + ": sentence has " + std::to_string(n) +
                          " tokens, exceeding the limit of " +
                          std::to_string(max_length));
  }
  for (std::size_t i = 0; i < s.entities.size(); ++i) {
    const auto &e = s.entities[i];
    if (e.span.start < 0 || e.span.start > e.span.end || e.span.end >= n) {
      throw ValidationError(where + ": entity " + std::to_string(i) + " [" +
                            std::to_string(e.span.start) + "," +
                            std::to_string(e.span.end) +
                            "] is out of range for " + std::to_string(n) +
                            " tokens");
    }
    if (e.type.empty()) throw ValidationError(where + ": entity with empty type");
  }
  std::set<std::tuple<int, int, std::string>> seen;
  const int ne = static_cast<int>(s.entities.size());
  for (const auto &r : s.relations) {
    if (r.head < 0 || r.head >= ne || r.tail < 0 || r.tail >= ne) {
      throw ValidationError(where + ": relation references missing entity (" +
                            std::to_string(r.head) + "," +
                            std::to_string(r.tail) + ")");
    }
    if (r.head == r.tail) throw ValidationError(where + ": relation with head == tail");
    if (!seen.emplace(r.head, r.tail, r.type).second) {
      throw ValidationError(where + ": duplicate relation (" +
                            std::to_string(r.head) + "," +
                            std::to_string(r.tail) + "," + r.type + ")");
    }
  }
}

inline nlohmann::ordered_json sentence_to_json(const Sentence &s) {
  nlohmann::ordered_json j;
  if (!s.id.empty()) j["id"] = s.id;
  j["tokens"] = s.tokens;
  j["entities"] = nlohmann::ordered_json::array();
  for (const auto &e : s.entities)
    j["entities"].push_back({e.span.start, e.span.end, e.type});
  j["relations"] = nlohmann::ordered_json::array();
  for (const auto &r : s.relations) j["relations"].push_back({r.head, r.tail, r.type});
  return j;
}

inline Sentence sentence_from_json(const nlohmann::json &j, const std::string &where) {
  Sentence s;
  try {
    if (!j.is_object()) throw ParseError(where + ": expected a JSON object");
    if (j.contains("id")) {
      s.id = j["id"].is_string() ? j["id"].get<std::string>() : j["id"].dump();
    }
    s.tokens = j.at("tokens").get<std::vector<std::string>>();
    if (j.contains("entities")) {
      for (const auto &e : j["entities"]) {
        if (!e.is_array() || e.size() != 3) throw ParseError(where + ": entity must be [start, end, type]");
        s.entities.push_back({{e[0].get<int>(), e[1].get<int>()}, e[2].get<std::string>()});
      }
    }
    if (j.contains("relations")) {
      for (const auto &r : j["relations"]) {
        if (!r.is_array() || r.size() != 3) throw ParseError(where + ": relation must be [head, tail, type]");
        s.relations.push_back({r[0].get<int>(), r[1].get<int>(), r[2].get<std::string>()});
      }
    }
  } catch (const nlohmann::json::exception &ex) {
    throw ParseError(where + ": " + ex.what());
  }
  return s;
}

// Parses a JSON-lines stream. Errors name the 1-based line and, for
// validation failures, the record id when present.
inline std::vector<Sentence> read_corpus_stream(std::istream &in, const std::string &name,
                                                int max_length = kDefaultMaxSentenceLength) {
  std::vector<Sentence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &ex) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": malformed JSON: " + ex.what());
    }
    const std::string where = name + ":" + std::to_string(lineno);
    Sentence s = sentence_from_json(j, where);
    validate_sentence(s, s.id.empty() ? where : where + " (id " + s.id + ")", max_length);
    out.push_back(std::move(s));
  }
  return out;
}

inline std::vector<Sentence> read_corpus_file(const std::string &path,
                                              int max_length = kDefaultMaxSentenceLength) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open corpus '" + path + "'");
  return read_corpus_stream(in, path, max_length);
}

inline std::string corpus_path(const std::string &path, const std::string &split) {
  namespace fs = std::filesystem;
  if (fs::is_directory(path)) return (fs::path(path) / (split + ".jsonl")).string();
  return path;
}

// `path` is either a corpus file or a directory holding <split>.jsonl.
inline std::vector<Sentence> load_corpus(const std::string &path, const std::string &split,
                                         int max_length = kDefaultMaxSentenceLength) {
  if (split != "train" && split != "dev" && split != "test") {
    throw ValidationError("unknown split '" + split + "' (expected train|dev|test)");
  }
  return read_corpus_file(corpus_path(path, split), max_length);
}

inline void write_corpus_stream(std::ostream &out, const std::vector<Sentence> &corpus) {
  for (const auto &s : corpus) out << sentence_to_json(s).dump() << '\n';
}

inline void write_corpus_file(const std::string &path, const std::vector<Sentence> &corpus) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write corpus '" + path + "'");
  write_corpus_stream(out, corpus);
}

// Label vocabularies. Index 0 of each is the reserved negative class; the
// remaining labels are sorted.
class LabelSchema {
 public:
  LabelSchema() : entity_types_{kNonEntity}, relation_types_{kNoRelation} {}

  LabelSchema(std::vector<std::string> entity_types, std::vector<std::string> relation_types)
      : LabelSchema() {
    std::set<std::string> es(entity_types.begin(), entity_types.end());
    std::set<std::string> rs(relation_types.begin(), relation_types.end());
    es.erase(kNonEntity);
    rs.erase(kNoRelation);
    entity_types_.insert(entity_types_.end(), es.begin(), es.end());
    relation_types_.insert(relation_types_.end(), rs.begin(), rs.end());
  }

  static LabelSchema from_corpus(const std::vector<Sentence> &train) {
    std::set<std::string> es, rs;
    for (const auto &s : train) {
      for (const auto &e : s.entities) es.insert(e.type);
      for (const auto &r : s.relations) rs.insert(r.type);
    }
    return LabelSchema({es.begin(), es.end()}, {rs.begin(), rs.end()});
  }

  const std::vector<std::string> &entity_types() const { return entity_types_; }
  const std::vector<std::string> &relation_types() const { return relation_types_; }
  int num_entity_classes() const { return static_cast<int>(entity_types_.size()); }
  int num_relation_classes() const { return static_cast<int>(relation_types_.size()); }

  int entity_index(const std::string &t) const { return lookup(entity_types_, t, "entity"); }
  int relation_index(const std::string &t) const { return lookup(relation_types_, t, "relation"); }

  // Throws on any label the vocabularies do not contain.
  void check_corpus(const std::vector<Sentence> &corpus) const {
    for (const auto &s : corpus) {
      for (const auto &e : s.entities) entity_index(e.type);
      for (const auto &r : s.relations) relation_index(r.type);
    }
  }

  bool operator==(const LabelSchema &) const = default;

 private:
  static int lookup(const std::vector<std::string> &v, const std::string &t, const char *what) {
    auto it = std::lower_bound(v.begin() + 1, v.end(), t);
    if (it != v.end() && *it == t) return static_cast<int>(it - v.begin());
    if (t == v.front()) return 0;
    throw ValidationError(std::string("unseen ") + what + " label '" + t + "'");
  }

  std::vector<std::string> entity_types_;
  std::vector<std::string> relation_types_;
};

// All spans of width <= max_width in lexicographic (start, end) order.
inline std::vector<Span> enumerate_spans(int length, int max_width) {
  if (max_width < 1) throw ValidationError("max_span_width must be >= 1");
  std::vector<Span> spans;
  for (int i = 0; i < length; ++i)
    for (int j = i; j < length && j - i + 1 <= max_width; ++j) spans.push_back({i, j});
  return spans;
}

inline std::vector<Span> enumerate_spans(const Sentence &s, int max_width) {
  return enumerate_spans(s.length(), max_width);
}

struct GoldAssignment {
  std::vector<int> node_labels;         // per candidate span
  std::vector<double> node_indicator;   // 1 iff node label != non-entity
  std::map<std::pair<Span, Span>, int> edge_labels;  // directed, positives only
  std::map<Span, int> span_labels;      // reachable gold spans
  int unreachable_entities = 0;
  int unreachable_relations = 0;

  int edge_label(const Span &head, const Span &tail) const {
    auto it = edge_labels.find({head, tail});
    return it == edge_labels.end() ? 0 : it->second;
  }
  int node_label(const Span &s) const {
    auto it = span_labels.find(s);
    return it == span_labels.end() ? 0 : it->second;
  }
};

// Gold labels over the candidate span set. Gold entities wider than the
// candidate width are counted as unreachable and never become positives,
// and neither do relations touching them.
inline GoldAssignment gold_assignment(const Sentence &s, const std::vector<Span> &spans,
                                      const LabelSchema &schema) {
  GoldAssignment g;
  std::set<Span> candidates(spans.begin(), spans.end());
  std::vector<bool> reachable(s.entities.size(), false);
  for (std::size_t i = 0; i < s.entities.size(); ++i) {
    const auto &e = s.entities[i];
    const int label = schema.entity_index(e.type);
    if (!candidates.count(e.span)) {
      ++g.unreachable_entities;
      continue;
    }
    reachable[i] = true;
    g.span_labels.emplace(e.span, label);  // first annotation wins
  }
  for (const auto &r : s.relations) {
    const int label = schema.relation_index(r.type);
    const auto h = static_cast<std::size_t>(r.head), t = static_cast<std::size_t>(r.tail);
    if (!reachable[h] || !reachable[t]) {
      ++g.unreachable_relations;
      continue;
    }
    if (s.entities[h].span == s.entities[t].span) continue;  // self-pair
    g.edge_labels.emplace(std::make_pair(s.entities[h].span, s.entities[t].span), label);
  }
  g.node_labels.reserve(spans.size());
  g.node_indicator.reserve(spans.size());
  for (const auto &sp : spans) {
    const int l = g.node_label(sp);
    g.node_labels.push_back(l);
    g.node_indicator.push_back(l != 0 ? 1.0 : 0.0);
  }
  return g;
}

// Converts the nested document format ({"doc_key", "sentences", "ner",
// "relations"} with document-level token offsets) into per-sentence records.
inline std::vector<Sentence> convert_nested_document(const nlohmann::json &doc,
                                                     const std::string &where) {
  if (!doc.is_object() || !doc.contains("sentences")) {
    throw ParseError(where + ": unknown format (expected an object with a 'sentences' field)");
  }
  std::vector<Sentence> out;
  try {
    const auto &sents = doc.at("sentences");
    const std::string key = doc.contains("doc_key") ? doc["doc_key"].get<std::string>() : where;
    int offset = 0;
    for (std::size_t si = 0; si < sents.size(); ++si) {
      Sentence s;
      s.id = key + "#" + std::to_string(si);
      s.tokens = sents[si].get<std::vector<std::string>>();
      std::map<Span, int> entity_of;
      if (doc.contains("ner") && si < doc["ner"].size()) {
        for (const auto &e : doc["ner"][si]) {
          Span sp{e[0].get<int>() - offset, e[1].get<int>() - offset};
          if (entity_of.count(sp)) continue;
          entity_of[sp] = static_cast<int>(s.entities.size());
          s.entities.push_back({sp, e[2].get<std::string>()});
        }
      }
      if (doc.contains("relations") && si < doc["relations"].size()) {
        std::set<std::tuple<int, int, std::string>> seen;
        for (const auto &r : doc["relations"][si]) {
          Span head{r[0].get<int>() - offset, r[1].get<int>() - offset};
          Span tail{r[2].get<int>() - offset, r[3].get<int>() - offset};
          auto hi = entity_of.find(head), ti = entity_of.find(tail);
          if (hi == entity_of.end() || ti == entity_of.end()) {
            throw ParseError(where + ": sentence " + std::to_string(si) +
                             ": relation argument is not an annotated entity");
          }
          const std::string type = r[4].get<std::string>();
          if (hi->second == ti->second) continue;
          if (!seen.emplace(hi->second, ti->second, type).second) continue;
          s.relations.push_back({hi->second, ti->second, type});
        }
      }
      validate_sentence(s, where + " (" + s.id + ")");
      offset += s.length();
      out.push_back(std::move(s));
    }
  } catch (const nlohmann::json::exception &ex) {
    throw ParseError(where + ": " + ex.what());
  }
  return out;
}

inline std::vector<Sentence> convert_nested_stream(std::istream &in, const std::string &name) {
  std::vector<Sentence> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error &ex) {
      throw ParseError(name + ":" + std::to_string(lineno) + ": malformed JSON: " + ex.what());
    }
    auto docs = convert_nested_document(j, name + ":" + std::to_string(lineno));
    out.insert(out.end(), std::make_move_iterator(docs.begin()), std::make_move_iterator(docs.end()));
  }
  return out;
}

}  // namespace spangraph

#endif  // SPANGRAPH_CORPUS_HPP_
