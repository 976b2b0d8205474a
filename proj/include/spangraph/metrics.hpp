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

// Exact-match scoring:
//   ENT   (start, end, type)
//   REL   (head span, tail span, relation type), directed
//   REL+  REL plus both entity types
// Counts are pooled over the corpus before P/R/F1 (micro averaging).

#ifndef SPANGRAPH_METRICS_HPP_
#define SPANGRAPH_METRICS_HPP_

#include <algorithm>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <vector>

#include <json.hpp>

#include "spangraph/corpus.hpp"

namespace spangraph {

struct Counts {
  long tp = 0;
  long fp = 0;
  long fn = 0;

  Counts &operator+=(const Counts &o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  bool operator==(const Counts &) const = default;
};

struct Prf {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  bool empty = false;  // no predictions and no gold; scored as 1 by convention
};

inline Prf prf(const Counts &c) {
  Prf r;
  if (c.tp == 0 && c.fp == 0 && c.fn == 0) {
    r.precision = r.recall = r.f1 = 1.0;
    r.empty = true;
    return r;
  }
  r.precision = c.tp + c.fp > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fp) : 0.0;
  r.recall = c.tp + c.fn > 0 ? static_cast<double>(c.tp) / static_cast<double>(c.tp + c.fn) : 0.0;
  const double s = r.precision + r.recall;
  r.f1 = s > 0.0 ? 2.0 * r.precision * r.recall / s : 0.0;
  return r;
}

using EntityKey = std::tuple<int, int, std::string>;
// head start/end, tail start/end, relation type, head type, tail type
using RelationKey = std::tuple<int, int, int, int, std::string, std::string, std::string>;

inline std::set<EntityKey> entity_set(const Sentence &s) {
  std::set<EntityKey> out;
  for (const auto &e : s.entities) out.emplace(e.span.start, e.span.end, e.type);
  return out;
}

// With `strict` off the entity-type fields are left empty so that only
// boundaries and the relation type take part in matching.
inline std::set<RelationKey> relation_set(const Sentence &s, bool strict) {
  std::set<RelationKey> out;
  for (const auto &r : s.relations) {
    const auto &h = s.entities.at(static_cast<std::size_t>(r.head));
    const auto &t = s.entities.at(static_cast<std::size_t>(r.tail));
    out.emplace(h.span.start, h.span.end, t.span.start, t.span.end, r.type, strict ? h.type : "",
                strict ? t.type : "");
  }
  return out;
}

template <typename T>
Counts compare_sets(const std::set<T> &pred, const std::set<T> &gold) {
  Counts c;
  for (const auto &p : pred) (gold.count(p) ? c.tp : c.fp) += 1;
  c.fn = static_cast<long>(gold.size()) - c.tp;
  return c;
}

inline Counts score_entities(const Sentence &pred, const Sentence &gold) {
  return compare_sets(entity_set(pred), entity_set(gold));
}

inline Counts score_relations(const Sentence &pred, const Sentence &gold, bool strict) {
  return compare_sets(relation_set(pred, strict), relation_set(gold, strict));
}

struct SentenceCounts {
  Counts ent, rel, rel_plus;
};

inline SentenceCounts score_sentence(const Sentence &pred, const Sentence &gold) {
  if (pred.tokens != gold.tokens) {
    throw ValidationError("prediction for '" + gold.id + "' has different tokens than the gold sentence");
  }
  return {score_entities(pred, gold), score_relations(pred, gold, false), score_relations(pred, gold, true)};
}

struct MetricReport {
  Counts ent, rel, rel_plus;
  long sentences = 0;

  Prf ent_prf() const { return prf(ent); }
  Prf rel_prf() const { return prf(rel); }
  Prf rel_plus_prf() const { return prf(rel_plus); }
};

inline MetricReport micro_aggregate(const std::vector<SentenceCounts> &per_sentence) {
  MetricReport m;
  for (const auto &s : per_sentence) {
    m.ent += s.ent;
    m.rel += s.rel;
    m.rel_plus += s.rel_plus;
    ++m.sentences;
  }
  return m;
}

inline MetricReport evaluate_predictions(const std::vector<Sentence> &preds, const std::vector<Sentence> &golds) {
  if (preds.size() != golds.size()) throw ValidationError("prediction and gold corpora differ in size");
  std::vector<SentenceCounts> per;
  for (std::size_t i = 0; i < preds.size(); ++i) per.push_back(score_sentence(preds[i], golds[i]));
  return micro_aggregate(per);
}

inline nlohmann::ordered_json metric_json(const Counts &c) {
  const Prf p = prf(c);
  nlohmann::ordered_json j;
  j["precision"] = p.precision;
  j["recall"] = p.recall;
  j["f1"] = p.f1;
  j["tp"] = c.tp;
  j["fp"] = c.fp;
  j["fn"] = c.fn;
  j["empty_convention"] = p.empty;
  return j;
}

inline nlohmann::ordered_json report_json(const MetricReport &m) {
  nlohmann::ordered_json j;
  j["sentences"] = m.sentences;
  j["ENT"] = metric_json(m.ent);
  j["REL"] = metric_json(m.rel);
  j["REL+"] = metric_json(m.rel_plus);
  return j;
}

inline std::string report_table(const MetricReport &m) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(4);
  out << "metric  precision  recall  f1      tp    fp    fn\n";
  auto row = [&out](const char *name, const Counts &c) {
    const Prf p = prf(c);
    out << std::left << std::setw(8) << name << std::setw(11) << p.precision << std::setw(8) << p.recall
        << std::setw(8) << p.f1 << std::setw(6) << c.tp << std::setw(6) << c.fp << c.fn
        << (p.empty ? "  (empty)" : "") << "\n";
  };
  row("ENT", m.ent);
  row("REL", m.rel);
  row("REL+", m.rel_plus);
  return out.str();
}

inline constexpr const char *kMiss = "miss";
inline constexpr const char *kSpurious = "spurious";

// Rows are gold labels plus "spurious", columns predicted labels plus
// "miss". A boundary-matched pair lands on (gold, pred); an unmatched gold
// item in its "miss" column; an unmatched prediction in the "spurious" row.
struct ConfusionMatrix {
  std::vector<std::string> labels;
  std::map<std::pair<std::string, std::string>, long> cells;

  long at(const std::string &gold, const std::string &pred) const {
    auto it = cells.find({gold, pred});
    return it == cells.end() ? 0 : it->second;
  }
  std::vector<std::string> rows() const {
    auto r = labels;
    r.push_back(kSpurious);
    return r;
  }
  std::vector<std::string> cols() const {
    auto c = labels;
    c.push_back(kMiss);
    return c;
  }
  long row_total(const std::string &gold) const {
    long t = 0;
    for (const auto &c : cols()) t += at(gold, c);
    return t;
  }
  long col_total(const std::string &pred) const {
    long t = 0;
    for (const auto &r : rows()) t += at(r, pred);
    return t;
  }
  long diagonal() const {
    long t = 0;
    for (const auto &l : labels) t += at(l, l);
    return t;
  }
};

// False positives split by cause, plus misses.
struct ErrorBreakdown {
  long wrong_type = 0;  // boundaries match a gold item, label differs
  long boundary = 0;    // overlaps a gold span without matching it
  long spurious = 0;    // touches no gold span
  long missed = 0;      // gold items with no boundary-matched prediction
};

struct ConfusionReport {
  ConfusionMatrix entities;
  ConfusionMatrix relations;
  ErrorBreakdown entity_errors;
};

namespace detail {

// Items keyed by boundary ("where"), each carrying a label.
template <typename Where>
void accumulate_confusion(const std::vector<std::pair<Where, std::string>> &pred,
                          const std::vector<std::pair<Where, std::string>> &gold, ConfusionMatrix &m) {
  std::vector<bool> used(pred.size(), false);
  std::vector<int> match(gold.size(), -1);
  // Exact matches first so that a relabelled prediction never takes the
  // place of a correct one.
  for (std::size_t g = 0; g < gold.size(); ++g) {
    for (std::size_t i = 0; i < pred.size(); ++i) {
      if (!used[i] && pred[i] == gold[g]) {
        used[i] = true;
        match[g] = static_cast<int>(i);
        break;
      }
    }
  }
  for (std::size_t g = 0; g < gold.size(); ++g) {
    for (std::size_t i = 0; i < pred.size() && match[g] < 0; ++i) {
      if (!used[i] && pred[i].first == gold[g].first) {
        used[i] = true;
        match[g] = static_cast<int>(i);
      }
    }
    const std::string col = match[g] < 0 ? std::string(kMiss) : pred[static_cast<std::size_t>(match[g])].second;
    ++m.cells[{gold[g].second, col}];
  }
  for (std::size_t i = 0; i < pred.size(); ++i)
    if (!used[i]) ++m.cells[{kSpurious, pred[i].second}];
}

template <typename Where>
std::vector<std::pair<Where, std::string>> unpack(const std::set<std::tuple<Where, std::string>> &s) {
  std::vector<std::pair<Where, std::string>> out;
  for (const auto &[w, l] : s) out.emplace_back(w, l);
  return out;
}

}  // namespace detail

// Entity matrix over typed spans, relation matrix over directed span pairs
// (REL matching). Marginals reconcile with the scorer: gold-row totals are
// TP + FN, predicted-column totals are TP + FP, the diagonal is TP.
inline ConfusionReport confusion_and_errors(const std::vector<Sentence> &preds, const std::vector<Sentence> &golds) {
  if (preds.size() != golds.size()) throw ValidationError("prediction and gold corpora differ in size");
  ConfusionReport rep;
  std::set<std::string> ent_labels, rel_labels;
  using SpanPair = std::pair<Span, Span>;
  for (std::size_t s = 0; s < preds.size(); ++s) {
    std::set<std::tuple<Span, std::string>> pe, ge;
    for (const auto &[a, b, t] : entity_set(preds[s])) pe.emplace(Span{a, b}, t);
    for (const auto &[a, b, t] : entity_set(golds[s])) ge.emplace(Span{a, b}, t);
    std::set<std::tuple<SpanPair, std::string>> pr, gr;
    for (const auto &k : relation_set(preds[s], false))
      pr.emplace(SpanPair{{std::get<0>(k), std::get<1>(k)}, {std::get<2>(k), std::get<3>(k)}}, std::get<4>(k));
    for (const auto &k : relation_set(golds[s], false))
      gr.emplace(SpanPair{{std::get<0>(k), std::get<1>(k)}, {std::get<2>(k), std::get<3>(k)}}, std::get<4>(k));
    for (const auto &[w, l] : pe) ent_labels.insert(l);
    for (const auto &[w, l] : ge) ent_labels.insert(l);
    for (const auto &[w, l] : pr) rel_labels.insert(l);
    for (const auto &[w, l] : gr) rel_labels.insert(l);

    const auto pev = detail::unpack(pe), gev = detail::unpack(ge);
    detail::accumulate_confusion(pev, gev, rep.entities);
    detail::accumulate_confusion(detail::unpack(pr), detail::unpack(gr), rep.relations);

    for (const auto &[span, label] : pev) {
      if (ge.count({span, label})) continue;
      bool same = false, overlap = false;
      for (const auto &[gs, gl] : gev) {
        same = same || gs == span;
        overlap = overlap || gs.overlaps(span);
      }
      ++(same ? rep.entity_errors.wrong_type : overlap ? rep.entity_errors.boundary : rep.entity_errors.spurious);
    }
    for (const auto &[gs, gl] : gev) {
      bool found = false;
      for (const auto &[ps, pl] : pev) found = found || ps == gs;
      if (!found) ++rep.entity_errors.missed;
    }
  }
  rep.entities.labels.assign(ent_labels.begin(), ent_labels.end());
  rep.relations.labels.assign(rel_labels.begin(), rel_labels.end());
  return rep;
}

inline std::string confusion_csv(const ConfusionMatrix &m) {
  std::ostringstream out;
  out << "gold\\pred";
  for (const auto &c : m.cols()) out << "," << c;
  out << "\n";
  for (const auto &r : m.rows()) {
    out << r;
    for (const auto &c : m.cols()) out << "," << m.at(r, c);
    out << "\n";
  }
  return out.str();
}

inline nlohmann::ordered_json confusion_json(const ConfusionMatrix &m) {
  nlohmann::ordered_json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  auto cells = nlohmann::ordered_json::array();
  for (const auto &r : m.rows()) {
    std::vector<long> row;
    for (const auto &c : m.cols()) row.push_back(m.at(r, c));
    cells.push_back(row);
  }
  j["counts"] = cells;
  return j;
}

}  // namespace spangraph

#endif  // SPANGRAPH_METRICS_HPP_
