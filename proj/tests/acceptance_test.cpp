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


// Acceptance checks. Prints one PASS/FAIL line per criterion with the
// measured values and runtime; exits nonzero if any criterion fails.
//
//   acceptance_test            all criteria
//   acceptance_test 5 7        a subset

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fixtures.hpp"
#include "spangraph/spangraph.hpp"
#include "test_util.hpp"

namespace spangraph {
namespace {

using testing::check_gradients;
using testing::random_matrix;
using testing::weighted_sum;

struct Outcome {
  bool ok = true;
  std::ostringstream detail;

  void expect(bool cond, const std::string &what) {
    if (!cond) {
      if (!ok) detail << "; ";
      ok = false;
      detail << "violated: " << what;
    }
  }
};

// ------------------------------------------------------------------ 1

void loss_oracles(Outcome &out) {
  const double ln2 = std::log(2.0);
  out.expect(std::abs(bce(1.0, 0.5) - ln2) < 1e-15, "BCE(1, 0.5) = ln 2");
  for (int k = 2; k <= 12; ++k) {
    const std::vector<double> logits(static_cast<std::size_t>(k), 0.7);
    for (int l = 0; l < k; ++l)
      out.expect(std::abs(ce(l, logits) - std::log(static_cast<double>(k))) < 1e-12, "CE(uniform over k) = ln k");
  }
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(0.0, 30.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> x(1 + rng() % 10);
    for (auto &v : x) v = n(rng);
    const auto p = softmax(x);
    out.expect(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12, "softmax sums to 1");
  }
  // L_total = L_V + L_E + L_edit + L_cls on random model inputs.
  double worst = 0.0;
  for (int t = 0; t < 200; ++t) {
    const Var lv = loss_node_select(Var::leaf(random_matrix(15, 1, rng, 3.0)),
                                    std::vector<double>{1, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0});
    const Var le = loss_edge_select(Var::leaf(random_matrix(6, 1, rng, 3.0)), std::vector<double>{0, 1, 0, 0, 0, 1});
    const Var led = loss_edit(Var::leaf(random_matrix(5, 1, rng, 3.0)), std::vector<double>{1, 1, 0, 1, 0});
    const Var lc = loss_cls(Var::leaf(random_matrix(3, 5, rng, 3.0)), std::vector<int>{1, 0, 4}, {0, 1, 2},
                            Var::leaf(random_matrix(2, 6, rng, 3.0)), std::vector<int>{5, 0}, {0, 1});
    const LossBreakdown b = combine_losses(lv, le, led, lc);
    worst = std::max(worst, std::abs(b.l_total() - (b.l_v() + b.l_e() + b.l_edit() + b.l_cls())));
  }
  out.expect(worst <= 1e-12, "L_total equals the component sum");
  out.detail << "max |L_total - sum| = " << worst;
}

// ------------------------------------------------------------------ 2

using Inputs = std::vector<std::pair<std::string, Var>>;

void add_params(Inputs &in, const nn::ParameterStore &store) {
  for (const auto &p : store.all()) in.emplace_back(p.name, p.var);
}

void gradient_checks(Outcome &out) {
  std::vector<std::pair<std::string, double>> results;
  auto record = [&](const std::string &name, const testing::GradCheck &g) {
    results.emplace_back(name, g.max_rel_error);
    out.expect(g.max_rel_error < 1e-4, name + " (worst " + g.worst + ")");
  };
  {
    nn::ParameterStore store;
    std::mt19937_64 rng(1);
    SpanRepresenter span(store, 6, rng);
    Var h = Var::leaf(random_matrix(5, 6, rng));
    const auto spans = enumerate_spans(5, 3);
    Inputs in{{"H", h}};
    add_params(in, store);
    record("span_repr", check_gradients(in, [&] { return weighted_sum(span(h, spans, {})); }));
  }
  for (bool ef : {false, true}) {
    nn::ParameterStore store;
    std::mt19937_64 rng(2);
    IdentifierPool pool(store, 3, 3, rng);
    GraphTokenizer tok(store, 6, ef, rng);
    Var s = Var::leaf(random_matrix(3, 6, rng));
    Inputs in{{"S", s}};
    add_params(in, store);
    const std::vector<GraphEdge> edges{{0, 1}, {2, 0}};
    record(ef ? "tokenize_graph+edge_features" : "tokenize_graph",
           check_gradients(in, [&] { return weighted_sum(tok(s, edges, pool, {1, 2, 0}).tokens); }));
  }
  {
    nn::ParameterStore store;
    std::mt19937_64 rng(3);
    GraphTransformer gt(store, 8, 2, 2, 16, rng);
    Var z = Var::leaf(random_matrix(5, 8, rng));
    Inputs in{{"Z0", z}};
    add_params(in, store);
    record("transformer_forward", check_gradients(in, [&] { return weighted_sum(gt(z, {})); }));
  }
  for (auto [name, v] : {std::pair{"gcn", MessagePassingVariant::kGcn}, std::pair{"gat", MessagePassingVariant::kGat},
                         std::pair{"sage", MessagePassingVariant::kSage}}) {
    nn::ParameterStore store;
    std::mt19937_64 rng(4);
    MessagePassingNetwork net(store, {v, 2, 6, false}, rng);
    Var z = Var::leaf(random_matrix(4, 6, rng));
    Inputs in{{"Z", z}};
    add_params(in, store);
    const std::vector<GraphEdge> edges{{0, 1}, {2, 1}, {1, 3}, {3, 0}};
    record(std::string("mpgnn_") + name, check_gradients(in, [&] {
             Var nodes = net.nodes(z, edges, {});
             return ag::add(weighted_sum(nodes, 1), weighted_sum(net.edge_states(nodes, edges), 2));
           }));
  }
  {
    std::mt19937_64 rng(5);
    Var w = Var::leaf(random_matrix(6, 1, rng));
    Var z = Var::leaf(random_matrix(5, 6, rng));
    KeepScorer k(w);
    record("keep_probabilities", check_gradients({{"w_k", w}, {"Z", z}}, [&] {
             return ag::bce_with_logits_sum(k.logits(z), std::vector<double>{1, 0, 1, 0, 0});
           }));
  }
  {
    nn::ParameterStore store;
    std::mt19937_64 rng(6);
    nn::FeedForward nf(store, "cls.node", 6, 6, 3, rng), ef(store, "cls.edge", 6, 6, 4, rng);
    Var z = Var::leaf(random_matrix(5, 6, rng));
    Inputs in{{"Z", z}};
    add_params(in, store);
    record("classify", check_gradients(in, [&] {
             return loss_cls(nf(ag::slice_rows(z, 0, 3), {}), std::vector<int>{1, 0, 2}, {0, 1, 2},
                             ef(ag::slice_rows(z, 3, 2), {}), std::vector<int>{3, 0}, {0, 1});
           }));
  }
  {
    Config cfg = testing::small_config(8);
    cfg.set("gt.edge_features", "true");
    const Sentence s = testing::five_token_sentence();
    Model model(cfg, testing::basic_labels(), TokenVocab::from_corpus({s}, 64), 11);
    const auto spans = model.candidate_spans(s);
    const GoldAssignment gold = gold_assignment(s, spans, model.labels());
    const GraphSelection sel = testing::three_node_selection(spans);
    const std::vector<Index> ids{2, 0, 1};
    ForwardOptions opt;
    opt.frozen = &sel;
    opt.frozen_assignment = &ids;
    Inputs in;
    add_params(in, model.params());
    record("L_total (5 tokens, 3 nodes, 2 edges, D=8)",
           check_gradients(in, [&] { return model.losses(model.forward(s, opt), gold).total; }));
  }
  double worst = 0.0;
  for (const auto &[n, e] : results) worst = std::max(worst, e);
  out.detail << results.size() << " checks, max rel. error " << worst;
}

// ------------------------------------------------------------------ 3

std::set<int> simulate_flat(const std::vector<ScoredSpan> &c) {
  std::vector<bool> alive(c.size(), true);
  std::set<int> out;
  for (;;) {
    int best = -1;
    for (std::size_t i = 0; i < c.size(); ++i) {
      if (!alive[i]) continue;
      auto key = [](const ScoredSpan &s) { return std::make_tuple(-s.score, s.span.start, s.span.width()); };
      if (best < 0 || key(c[i]) < key(c[static_cast<std::size_t>(best)])) best = static_cast<int>(i);
    }
    if (best < 0) return out;
    out.insert(best);
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i].span.overlaps(c[static_cast<std::size_t>(best)].span)) alive[i] = false;
  }
}

void structural_invariants(Outcome &out) {
  double ortho = 0.0;
  for (auto [rows, cols] : std::vector<std::pair<Index, Index>>{{4, 4}, {32, 32}, {100, 384}, {384, 384}}) {
    nn::ParameterStore store;
    std::mt19937_64 rng(static_cast<std::uint64_t>(rows * 7 + cols));
    IdentifierPool pool(store, rows, cols, rng);
    const Matrix p = pool.table().value();
    ortho = std::max(ortho, (p * p.transpose() - Matrix::Identity(rows, rows)).cwiseAbs().maxCoeff());
  }
  out.expect(ortho < 1e-5, "identifier orthonormality");

  double equiv = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    nn::ParameterStore store;
    std::mt19937_64 rng(static_cast<std::uint64_t>(100 + trial));
    GraphTransformer gt(store, 16, 2, 4, 64, rng);
    const Index n = 9;
    const Matrix z = random_matrix(n, 16, rng);
    std::vector<Index> perm(static_cast<std::size_t>(n));
    std::iota(perm.begin(), perm.end(), Index{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    Matrix zp(n, 16);
    for (Index i = 0; i < n; ++i) zp.row(i) = z.row(perm[static_cast<std::size_t>(i)]);
    const Matrix a = gt(Var::constant(z), {}).value(), b = gt(Var::constant(zp), {}).value();
    for (Index i = 0; i < n; ++i)
      equiv = std::max(equiv, (b.row(i) - a.row(perm[static_cast<std::size_t>(i)])).cwiseAbs().maxCoeff());
  }
  out.expect(equiv < 1e-5, "transformer permutation equivariance");

  std::mt19937_64 rng(2025);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int post_fail = 0, oracle_fail = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int len = 1 + static_cast<int>(rng() % 15);
    const int n = 1 + static_cast<int>(rng() % 10);
    InitialGraph g;
    KeepProbabilities p;
    for (int i = 0; i < n; ++i) {
      const int a = static_cast<int>(rng() % len), b = static_cast<int>(rng() % len);
      g.node_span_index.push_back(i);
      g.node_spans.push_back({std::min(a, b), std::max(a, b)});
      g.node_scores.push_back(0.5);
      p.node_keep.push_back(std::round(u(rng) * 10.0) / 10.0);  // coarse grid forces ties
    }
    const int m = static_cast<int>(rng() % 12);
    for (int i = 0; i < m; ++i) {
      g.edges.push_back({static_cast<int>(rng() % n), static_cast<int>(rng() % n)});
      g.edge_scores.push_back(0.0);
      p.edge_keep.push_back(u(rng));
    }
    const FinalStructure f = decode_structure(g, p, true);
    const std::set<int> kept(f.nodes.begin(), f.nodes.end());
    bool ok = true;
    for (int e : f.edges) {
      const auto &ge = g.edges[static_cast<std::size_t>(e)];
      ok = ok && kept.count(ge.source) && kept.count(ge.target);
    }
    for (int a : f.nodes)
      for (int b : f.nodes)
        ok = ok && (a == b || !g.node_spans[static_cast<std::size_t>(a)].overlaps(g.node_spans[static_cast<std::size_t>(b)]));
    post_fail += ok ? 0 : 1;

    std::vector<ScoredSpan> cands;
    std::vector<int> above;
    for (int i = 0; i < n; ++i) {
      if (p.node_keep[static_cast<std::size_t>(i)] <= 0.5) continue;
      above.push_back(i);
      cands.push_back({g.node_spans[static_cast<std::size_t>(i)], p.node_keep[static_cast<std::size_t>(i)]});
    }
    std::set<int> expect;
    for (int c : simulate_flat(cands)) expect.insert(above[static_cast<std::size_t>(c)]);
    oracle_fail += expect == kept ? 0 : 1;
  }
  out.expect(post_fail == 0, "decode post-conditions");
  out.expect(oracle_fail == 0, "greedy decoder equals simulation oracle");
  out.detail << "orthonormality dev " << ortho << ", equivariance dev " << equiv << ", post-condition failures "
             << post_fail << "/1000, oracle mismatches " << oracle_fail << "/1000";
}

// ------------------------------------------------------------------ 4

Sentence random_graph(std::mt19937_64 &rng) {
  Sentence s;
  s.tokens = {"a", "b", "c", "d", "e", "f", "g"};
  const int ne = static_cast<int>(rng() % 7);
  for (int i = 0; i < ne; ++i) {
    const int a = static_cast<int>(rng() % 5);
    s.entities.push_back({{a, a + static_cast<int>(rng() % 3)}, rng() % 3 == 0 ? "ORG" : rng() % 2 ? "PER" : "LOC"});
  }
  if (ne > 0) {
    const int nr = static_cast<int>(rng() % 21);
    for (int i = 0; i < nr; ++i)
      s.relations.push_back({static_cast<int>(rng() % ne), static_cast<int>(rng() % ne), rng() % 2 ? "r1" : "r2"});
  }
  return s;
}

// Brute force over string tuples: dedupe by linear scan, count matches
// pairwise.
Counts tuple_oracle(const std::vector<std::string> &pred_raw, const std::vector<std::string> &gold_raw) {
  auto dedupe = [](const std::vector<std::string> &v) {
    std::vector<std::string> out;
    for (const auto &x : v)
      if (std::find(out.begin(), out.end(), x) == out.end()) out.push_back(x);
    return out;
  };
  const auto pred = dedupe(pred_raw), gold = dedupe(gold_raw);
  Counts c;
  for (const auto &p : pred) (std::find(gold.begin(), gold.end(), p) != gold.end() ? c.tp : c.fp) += 1;
  for (const auto &g : gold) c.fn += std::find(pred.begin(), pred.end(), g) == pred.end() ? 1 : 0;
  return c;
}

std::vector<std::string> entity_strings(const Sentence &s) {
  std::vector<std::string> out;
  for (const auto &e : s.entities) out.push_back(std::to_string(e.span.start) + "," + std::to_string(e.span.end) + "," + e.type);
  return out;
}

std::vector<std::string> relation_strings(const Sentence &s, bool strict) {
  std::vector<std::string> out;
  for (const auto &r : s.relations) {
    const auto &h = s.entities[static_cast<std::size_t>(r.head)];
    const auto &t = s.entities[static_cast<std::size_t>(r.tail)];
    std::string k = std::to_string(h.span.start) + "," + std::to_string(h.span.end) + ">" + std::to_string(t.span.start) +
                    "," + std::to_string(t.span.end) + ":" + r.type;
    if (strict) k += ":" + h.type + ":" + t.type;
    out.push_back(k);
  }
  return out;
}

void scoring_oracle(Outcome &out) {
  std::mt19937_64 rng(4);
  int mismatches = 0, monotone = 0;
  for (int t = 0; t < 1000; ++t) {
    const Sentence p = random_graph(rng), g = random_graph(rng);
    mismatches += score_entities(p, g) == tuple_oracle(entity_strings(p), entity_strings(g)) ? 0 : 1;
    const Counts rel = score_relations(p, g, false), plus = score_relations(p, g, true);
    mismatches += rel == tuple_oracle(relation_strings(p, false), relation_strings(g, false)) ? 0 : 1;
    mismatches += plus == tuple_oracle(relation_strings(p, true), relation_strings(g, true)) ? 0 : 1;
    monotone += plus.tp <= rel.tp ? 0 : 1;
  }
  out.expect(mismatches == 0, "scorer equals tuple-set oracle");
  out.expect(monotone == 0, "REL+ TP <= REL TP");
  out.detail << "count mismatches " << mismatches << "/3000, monotonicity violations " << monotone << "/1000";
}

// ------------------------------------------------------------------ 5-7

struct RunSummary {
  std::vector<StepLog> log;
  MetricReport report;
  std::string report_json;
};

RunSummary train_and_score(const Config &cfg, const std::vector<Sentence> &train, const std::vector<Sentence> &test,
                           const std::string &checkpoint = "") {
  Model model(cfg, LabelSchema::from_corpus(train), TokenVocab::from_corpus(train, 64),
              static_cast<std::uint64_t>(cfg.get_int("train.seed")));
  Trainer trainer(model, TrainSettings::from_config(cfg));
  RunSummary r;
  r.log = trainer.train(train, {}, nullptr, checkpoint).log;
  r.report = evaluate_model(model, test).report;
  r.report_json = report_json(r.report).dump();
  return r;
}

// 32 basic sentences (2 entity types, 2 relation types, 50 words), D = 64,
// two transformer layers, K = L, 300 steps at batch 8.
Config overfit_config() {
  Config c = testing::small_config(64);
  c.set("gt.heads", "8");
  c.set("gt.edge_features", "true");
  c.set("train.total_steps", "300");
  c.set("train.warmup_steps", "30");
  c.set("train.batch_size", "8");
  c.set("train.lr_backbone", "3e-3");
  c.set("train.lr_others", "3e-3");
  c.set("train.eval_every", "0");
  return c;
}

void overfit(Outcome &out) {
  const auto corpus = synthetic::generate(32, 5);
  const RunSummary r = train_and_score(overfit_config(), corpus, corpus);
  const double ent = r.report.ent_prf().f1, rel_plus = r.report.rel_plus_prf().f1;
  out.expect(ent >= 0.95, "train ENT F1 >= 0.95");
  out.expect(rel_plus >= 0.90, "train REL+ F1 >= 0.90");
  out.detail << "ENT F1 " << ent << ", REL+ F1 " << rel_plus << ", L_total " << r.log.front().l_total << " -> "
             << r.log.back().l_total;
}

void ablation(Outcome &out) {
  const auto train = synthetic::generate(200, 11, synthetic::Kind::kCompositional, "train");
  const auto test = synthetic::generate(100, 12, synthetic::Kind::kCompositional, "test");
  Config base = testing::small_config(64);
  base.set("gt.heads", "8");
  base.set("gt.edge_features", "true");
  base.set("model.dropout", "0.1");
  base.set("train.total_steps", "600");
  base.set("train.warmup_steps", "60");
  base.set("train.lr_backbone", "3e-3");
  base.set("train.lr_others", "3e-3");
  base.set("train.eval_every", "0");
  double trans = 0.0;
  for (const char *backend : {"transformer", "gcn", "gat", "sage"}) {
    Config c = base;
    c.set("gt.backend", backend);
    const double f1 = train_and_score(c, train, test).report.rel_plus_prf().f1;
    if (std::string(backend) == "transformer") {
      trans = f1;
    } else {
      out.expect(trans >= f1 - 0.02, std::string("transformer REL+ >= ") + backend + " REL+ - 0.02");
    }
    out.detail << backend << " REL+ " << f1 << (std::string(backend) == "sage" ? "" : ", ");
  }
}

void determinism(Outcome &out) {
  Config cfg = overfit_config();
  cfg.set("train.total_steps", "40");
  cfg.set("model.dropout", "0.1");
  const auto corpus = synthetic::generate(32, 5);
  const std::string ckpt =
      (std::filesystem::temp_directory_path() / ("spangraph_accept_" + std::to_string(::getpid()) + ".ckpt")).string();
  const RunSummary a = train_and_score(cfg, corpus, corpus, ckpt);
  const RunSummary b = train_and_score(cfg, corpus, corpus);
  bool same = a.log.size() == b.log.size();
  for (std::size_t i = 0; same && i < a.log.size(); ++i) same = a.log[i].to_json().dump() == b.log[i].to_json().dump();
  out.expect(same, "identical loss logs");
  const LoadedCheckpoint c1 = load_checkpoint(ckpt), c2 = load_checkpoint(ckpt);
  const std::string r1 = report_json(evaluate_model(*c1.model, corpus).report).dump(2);
  const std::string r2 = report_json(evaluate_model(*c2.model, corpus).report).dump(2);
  const std::string r3 = report_json(evaluate_model(*c1.model, corpus).report).dump(2);
  std::filesystem::remove(ckpt);
  out.expect(r1 == r2 && r1 == r3, "byte-identical report JSON");
  out.detail << a.log.size() << " logged steps compared, report " << r1.size() << " bytes";
}

struct Criterion {
  int id;
  const char *name;
  double limit_seconds;
  std::function<void(Outcome &)> run;
};

}  // namespace
}  // namespace spangraph

int main(int argc, char **argv) {
  using namespace spangraph;
  const std::vector<Criterion> all{
      {1, "loss and algebra oracles", 10, loss_oracles},
      {2, "gradient checks", 120, gradient_checks},
      {3, "structural invariants", 60, structural_invariants},
      {4, "scoring oracle", 30, scoring_oracle},
      {5, "overfit on 32 synthetic sentences", 300, overfit},
      {6, "ablation direction", 1200, ablation},
      {7, "determinism", 600, determinism},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
  int failures = 0;
  for (const auto &c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    Outcome out;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      c.run(out);
    } catch (const std::exception &e) {
      out.expect(false, std::string("exception: ") + e.what());
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.expect(secs < c.limit_seconds, "runtime under " + std::to_string(static_cast<int>(c.limit_seconds)) + " s");
    std::printf("%s criterion %d: %s [%.1f s] %s\n", out.ok ? "PASS" : "FAIL", c.id, c.name, secs,
                out.detail.str().c_str());
    std::fflush(stdout);
    failures += out.ok ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
