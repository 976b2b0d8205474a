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


// Small models and sentences shared by the training and acceptance tests.

#ifndef SPANGRAPH_TESTS_FIXTURES_HPP_
#define SPANGRAPH_TESTS_FIXTURES_HPP_

#include <algorithm>
#include <string>
#include <vector>

#include "spangraph/spangraph.hpp"

namespace spangraph::testing {

// Toy-encoder model of width d. Dropout is off so gradients and overfit
// runs are deterministic functions of the parameters.
inline Config small_config(int d, const std::string &backend = "transformer") {
  Config c;
  c.set("encoder.hidden_size", std::to_string(d));
  c.set("encoder.heads", "2");
  c.set("encoder.toy_vocab_size", "64");
  c.set("data.max_sentence_length", "64");
  c.set("gt.backend", backend);
  c.set("gt.layers", "2");
  c.set("gt.heads", "2");
  c.set("model.dropout", "0");
  return c;
}

inline LabelSchema basic_labels() { return LabelSchema({"loc", "per"}, {"born_in", "live_in"}); }

// "ann lives in new york": per(0,0), loc(3,4), live_in(0 -> 1).
inline Sentence five_token_sentence() {
  Sentence s;
  s.id = "fixture";
  s.tokens = {"ann", "lives", "in", "new", "york"};
  s.entities = {{{0, 0}, "per"}, {{3, 4}, "loc"}};
  s.relations = {{0, 1, "live_in"}};
  return s;
}

inline int span_index(const std::vector<Span> &spans, Span s) {
  auto it = std::find(spans.begin(), spans.end(), s);
  if (it == spans.end()) throw ValidationError("span not enumerated");
  return static_cast<int>(it - spans.begin());
}

// Three nodes: (0,0), (3,4) and (1,1); edges 0 -> 1 and 2 -> 0.
inline GraphSelection three_node_selection(const std::vector<Span> &spans) {
  GraphSelection g;
  g.nodes = {span_index(spans, {0, 0}), span_index(spans, {3, 4}), span_index(spans, {1, 1})};
  g.edges = {{0, 1}, {2, 0}};
  return g;
}

}  // namespace spangraph::testing

#endif  // SPANGRAPH_TESTS_FIXTURES_HPP_
