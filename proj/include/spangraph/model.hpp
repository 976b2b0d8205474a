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

// End-to-end extractor: encode -> span representations -> candidate graph
// -> structure learner (graph transformer or message passing) -> keep/drop
// editing -> node/edge classification.

#ifndef SPANGRAPH_MODEL_HPP_
#define SPANGRAPH_MODEL_HPP_

#include <algorithm>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "spangraph/config.hpp"
#include "spangraph/corpus.hpp"
#include "spangraph/edit_decode.hpp"
#include "spangraph/encoder.hpp"
#include "spangraph/graph_builder.hpp"
#include "spangraph/graph_transformer.hpp"
#include "spangraph/losses.hpp"
#include "spangraph/mpgnn.hpp"
#include "spangraph/nn.hpp"

namespace spangraph {

// Resolved, typed view of the model-related configuration keys.
struct ModelSettings {
  EncoderConfig encoder;
  int max_span_width = 12;
  int max_sentence_length = kDefaultMaxSentenceLength;
  std::string backend = "transformer";
  Index layers = 2;
  Index heads = 8;
  Index ffn_multiplier = 4;
  Index pool_size = 0;
  bool edge_features = false;
  bool freeze_identifiers = false;
  bool undirected_messages = false;
  int k_nodes = 0;  // 0 = sentence length
  int k_edges = 0;
  bool force_gold = false;
  bool flat = true;
  double threshold = 0.5;
  bool cls_kept_only = false;  // loss.strict_paper
  double dropout = 0.1;

  static ModelSettings from_config(const Config &c) {
    c.validate();
    ModelSettings s;
    s.encoder.backbone = c.get_string("encoder.backbone");
    s.encoder.hidden = c.get_int("encoder.hidden_size");
    s.encoder.heads = c.get_int("encoder.heads");
    s.encoder.adapter_id = c.get_string("encoder.adapter_id");
    s.encoder.max_positions = c.get_int("data.max_sentence_length");
    s.encoder.dropout = c.get_double("model.dropout");
    s.max_span_width = static_cast<int>(c.get_int("data.max_span_width"));
    s.max_sentence_length = static_cast<int>(c.get_int("data.max_sentence_length"));
    s.backend = c.get_string("gt.backend");
    s.layers = c.get_int("gt.layers");
    s.heads = c.get_int("gt.heads");
    s.ffn_multiplier = c.get_int("gt.ffn_multiplier");
    s.pool_size = c.get_int("gt.pool_size");
    if (s.pool_size == 0) s.pool_size = s.encoder.hidden / 2;
    s.edge_features = c.get_bool("gt.edge_features");
    s.freeze_identifiers = c.get_bool("gt.freeze_identifiers");
    s.undirected_messages = c.get_bool("gt.undirected_messages");
    s.k_nodes = static_cast<int>(c.get_int("graph.k_nodes"));
    s.k_edges = static_cast<int>(c.get_int("graph.k_edges"));
    s.force_gold = c.get_bool("graph.force_gold");
    s.flat = c.get_bool("decode.flat");
    s.threshold = c.get_double("decode.threshold");
    s.cls_kept_only = c.get_bool("loss.strict_paper");
    s.dropout = c.get_double("model.dropout");
    return s;
  }
};

struct ForwardOptions {
  bool training = false;
  std::mt19937_64 *rng = nullptr;         // dropout and random identifier draws
  const GoldAssignment *gold = nullptr;   // consulted only for force_gold
  const GraphSelection *frozen = nullptr;
  const std::vector<Index> *frozen_assignment = nullptr;
  bool capture_attention = false;
};

struct ForwardResult {
  std::vector<Span> spans;
  Var token_states;  // H
  Var span_reps;     // S
  BuiltGraph built;
  std::vector<Index> assignment;
  Var refined;       // Z_L, nodes then edges
  Var keep_logits;   // (|V| + |E|) x 1
  Var node_logits;   // |V| x |C|
  Var edge_logits;   // |E| x |R|
  AttentionTrace attention;

  const InitialGraph &graph() const { return built.graph; }
  KeepProbabilities keep() const { return keep_probabilities(keep_logits.value(), graph().num_nodes()); }
};

struct ScoredEntity {
  Entity entity;
  double keep = 0.0;
};

struct Prediction {
  Sentence graph;  // tokens + predicted entities/relations
  std::vector<double> entity_keep;
  std::vector<double> relation_keep;
};

class Model {
 public:
  Model(const Config &config, LabelSchema labels, TokenVocab vocab, std::uint64_t seed)
      : config_(config),
        settings_(ModelSettings::from_config(config)),
        labels_(std::move(labels)) {
    std::mt19937_64 rng(seed);
    const Index d = settings_.encoder.hidden;
    encoder_ = TokenEncoder(params_, settings_.encoder, vocab, rng);
    span_ = SpanRepresenter(params_, d, rng);
    node_sel_ = NodeSelector(params_, d, rng);
    edge_sel_ = EdgeSelector(params_, d, rng);
    if (settings_.backend == "transformer") {
      pool_ = IdentifierPool(params_, settings_.pool_size, d / 2, rng, !settings_.freeze_identifiers);
      tokenizer_ = GraphTokenizer(params_, d, settings_.edge_features, rng);
      transformer_ = GraphTransformer(params_, d, settings_.layers, settings_.heads,
                                      settings_.ffn_multiplier * d, rng);
    } else {
      MessagePassingConfig mp{parse_variant(settings_.backend), settings_.layers, d,
                              settings_.undirected_messages};
      mp_ = MessagePassingNetwork(params_, mp, rng);
    }
    keep_ = KeepScorer(params_, d, rng);
    node_cls_ = nn::FeedForward(params_, "cls.node", d, d, labels_.num_entity_classes(), rng);
    edge_cls_ = nn::FeedForward(params_, "cls.edge", d, d, labels_.num_relation_classes(), rng);
  }

  const Config &config() const { return config_; }
  const ModelSettings &settings() const { return settings_; }
  ModelSettings &mutable_settings() { return settings_; }
  const LabelSchema &labels() const { return labels_; }
  const TokenVocab &vocab() const { return encoder_.vocab(); }
  nn::ParameterStore &params() { return params_; }
  const nn::ParameterStore &params() const { return params_; }
  bool uses_transformer() const { return settings_.backend == "transformer"; }
  const IdentifierPool &identifier_pool() const { return pool_; }

  std::vector<Span> candidate_spans(const Sentence &s) const {
    return enumerate_spans(s, settings_.max_span_width);
  }

  int node_budget(int length) const {
    int k = settings_.k_nodes > 0 ? settings_.k_nodes : length;
    if (uses_transformer()) k = std::min<int>(k, static_cast<int>(pool_.size()));
    return std::max(k, 1);
  }
  int edge_budget(int length) const {
    return std::max(settings_.k_edges > 0 ? settings_.k_edges : length, 1);
  }

  ForwardResult forward(const Sentence &s, const ForwardOptions &opt) const {
    if (s.length() > settings_.max_sentence_length) {
      throw ValidationError("sentence of " + std::to_string(s.length()) + " tokens exceeds the limit of " +
                            std::to_string(settings_.max_sentence_length));
    }
    nn::Context ctx{opt.training, settings_.dropout, opt.rng};
    ForwardResult r;
    r.spans = candidate_spans(s);
    r.token_states = encoder_(s.tokens, ctx);
    r.span_reps = span_(r.token_states, r.spans, ctx);

    BuildOptions bo;
    bo.k_nodes = node_budget(s.length());
    bo.k_edges = edge_budget(s.length());
    bo.frozen = opt.frozen;
    std::vector<int> required;
    std::function<std::vector<int>(const std::vector<Span> &, const std::vector<GraphEdge> &)> edge_fn;
    if (settings_.force_gold && opt.training && opt.gold) {
      for (std::size_t i = 0; i < r.spans.size(); ++i)
        if (opt.gold->node_indicator[i] > 0.0) required.push_back(static_cast<int>(i));
      bo.required_nodes = &required;
      const GoldAssignment *gold = opt.gold;
      edge_fn = [gold](const std::vector<Span> &nodes, const std::vector<GraphEdge> &pairs) {
        std::vector<int> out;
        for (std::size_t p = 0; p < pairs.size(); ++p) {
          if (gold->edge_label(nodes[static_cast<std::size_t>(pairs[p].source)],
                               nodes[static_cast<std::size_t>(pairs[p].target)]) != 0)
            out.push_back(static_cast<int>(p));
        }
        return out;
      };
    }
    r.built = build_initial_graph(r.spans, r.span_reps, node_sel_, edge_sel_, bo, edge_fn);
    const InitialGraph &g = r.built.graph;

    if (uses_transformer()) {
      if (opt.frozen_assignment) {
        r.assignment = *opt.frozen_assignment;
      } else {
        r.assignment = assign_identifiers(g.num_nodes(), pool_.size(),
                                          opt.training ? AssignmentMode::kRandom : AssignmentMode::kDeterministic,
                                          opt.rng);
      }
      TokenizedGraph tg = tokenizer_(r.built.node_reps, g.edges, pool_, r.assignment);
      r.refined = transformer_(tg.tokens, ctx, opt.capture_attention ? &r.attention : nullptr);
    } else {
      if (opt.capture_attention) {
        throw UnsupportedError("attention capture requires the transformer backend (got " + settings_.backend + ")");
      }
      Var nodes = mp_.nodes(r.built.node_reps, g.edges, ctx);
      r.refined = ag::concat_rows({nodes, mp_.edge_states(nodes, g.edges)});
    }

    r.keep_logits = keep_.logits(r.refined);
    const Index n = g.num_nodes();
    r.node_logits = node_cls_(ag::slice_rows(r.refined, 0, n), ctx);
    r.edge_logits = edge_cls_(ag::slice_rows(r.refined, n, g.num_edges()), ctx);
    return r;
  }

  LossBreakdown losses(const ForwardResult &r, const GoldAssignment &gold) const {
    const InitialGraph &g = r.graph();
    Var l_v = loss_node_select(r.built.span_logits, gold.node_indicator);

    std::vector<double> pair_target;
    pair_target.reserve(r.built.pairs.size());
    for (const auto &p : r.built.pairs) {
      pair_target.push_back(gold.edge_label(g.node_spans[static_cast<std::size_t>(p.source)],
                                            g.node_spans[static_cast<std::size_t>(p.target)]) != 0
                                ? 1.0
                                : 0.0);
    }
    Var l_e = loss_edge_select(r.built.pair_scores, pair_target);

    std::vector<int> node_labels, edge_labels;
    std::vector<double> keep_target;
    for (const auto &sp : g.node_spans) {
      node_labels.push_back(gold.node_label(sp));
      keep_target.push_back(node_labels.back() != 0 ? 1.0 : 0.0);
    }
    for (const auto &e : g.edges) {
      edge_labels.push_back(gold.edge_label(g.node_spans[static_cast<std::size_t>(e.source)],
                                            g.node_spans[static_cast<std::size_t>(e.target)]));
      keep_target.push_back(edge_labels.back() != 0 ? 1.0 : 0.0);
    }
    Var l_edit = loss_edit(r.keep_logits, keep_target);

    std::vector<Index> node_rows, edge_rows;
    if (settings_.cls_kept_only) {
      const FinalStructure f = threshold_structure(r.keep(), settings_.threshold);
      for (int i : f.nodes) node_rows.push_back(i);
      for (int i : f.edges) edge_rows.push_back(i);
    } else {
      for (int i = 0; i < g.num_nodes(); ++i) node_rows.push_back(i);
      for (int i = 0; i < g.num_edges(); ++i) edge_rows.push_back(i);
    }
    Var l_cls = loss_cls(r.node_logits, node_labels, node_rows, r.edge_logits, edge_labels, edge_rows);
    return combine_losses(l_v, l_e, l_edit, l_cls);
  }

  // Decodes the IE graph of a forward pass: kept nodes/edges after
  // thresholding, flat decoding and the consistency filter, labelled by
  // argmax; non-entity nodes and no-relation edges are dropped, as are
  // edges whose endpoints were dropped.
  Prediction decode(const Sentence &s, const ForwardResult &r) const {
    const InitialGraph &g = r.graph();
    const KeepProbabilities keep = r.keep();
    const FinalStructure f = decode_structure(g, keep, settings_.flat, settings_.threshold);
    Prediction p;
    p.graph.id = s.id;
    p.graph.tokens = s.tokens;
    std::vector<int> entity_of(static_cast<std::size_t>(g.num_nodes()), -1);
    for (int n : f.nodes) {
      const int label = argmax_row(r.node_logits.value(), n);
      if (label == 0) continue;
      entity_of[static_cast<std::size_t>(n)] = static_cast<int>(p.graph.entities.size());
      p.graph.entities.push_back({g.node_spans[static_cast<std::size_t>(n)], labels_.entity_types()[static_cast<std::size_t>(label)]});
      p.entity_keep.push_back(keep.node_keep[static_cast<std::size_t>(n)]);
    }
    for (int e : f.edges) {
      const int label = argmax_row(r.edge_logits.value(), e);
      if (label == 0) continue;
      const auto &ge = g.edges[static_cast<std::size_t>(e)];
      const int h = entity_of[static_cast<std::size_t>(ge.source)];
      const int t = entity_of[static_cast<std::size_t>(ge.target)];
      if (h < 0 || t < 0) continue;
      p.graph.relations.push_back({h, t, labels_.relation_types()[static_cast<std::size_t>(label)]});
      p.relation_keep.push_back(keep.edge_keep[static_cast<std::size_t>(e)]);
    }
    return p;
  }

  Prediction predict(const Sentence &s) const {
    ag::NoGradGuard no_grad;
    ForwardOptions opt;
    return decode(s, forward(s, opt));
  }

  static int argmax_row(const Matrix &m, Index row) {
    Index best = 0;
    for (Index c = 1; c < m.cols(); ++c)
      if (m(row, c) > m(row, best)) best = c;
    return static_cast<int>(best);
  }

 private:
  Config config_;
  ModelSettings settings_;
  LabelSchema labels_;
  nn::ParameterStore params_;
  TokenEncoder encoder_;
  SpanRepresenter span_;
  NodeSelector node_sel_;
  EdgeSelector edge_sel_;
  IdentifierPool pool_;
  GraphTokenizer tokenizer_;
  GraphTransformer transformer_;
  MessagePassingNetwork mp_;
  KeepScorer keep_;
  nn::FeedForward node_cls_;
  nn::FeedForward edge_cls_;
};

}  // namespace spangraph

#endif  // SPANGRAPH_MODEL_HPP_
