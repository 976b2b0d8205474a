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


#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "spangraph/config.hpp"
#include "spangraph/corpus.hpp"
#include "spangraph/synthetic.hpp"

namespace spangraph {
namespace {

std::vector<Sentence> parse(const std::string &text) {
  std::istringstream in(text);
  return read_corpus_stream(in, "mem");
}

TEST(ReadCorpus, OneRecord) {
  const auto c = parse(
      R"({"tokens":["John","lives","in","Paris"],"entities":[[0,0,"Peop"],[3,3,"Loc"]],"relations":[[0,1,"Live_In"]]})");
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].entities.size(), 2u);
  EXPECT_EQ(c[0].relations.size(), 1u);
  EXPECT_EQ(c[0].entities[1].span, (Span{3, 3}));
}

TEST(ReadCorpus, EmptyStreamIsEmptyCorpus) { EXPECT_TRUE(parse("").empty()); }

TEST(ReadCorpus, OutOfRangeEntityIsRejectedWithLine) {
  try {
    parse("\n" R"({"tokens":["a","b","c","d"],"entities":[[3,5,"Loc"]]})");
    FAIL() << "expected a validation error";
  } catch (const ValidationError &e) {
    EXPECT_NE(std::string(e.what()).find("mem:2"), std::string::npos) << e.what();
  }
}

TEST(ReadCorpus, MalformedJsonNamesLine) {
  try {
    parse(R"({"tokens":["a"]})" "\n{oops");
    FAIL() << "expected a parse error";
  } catch (const ParseError &e) {
    EXPECT_NE(std::string(e.what()).find("mem:2"), std::string::npos) << e.what();
  }
}

TEST(ReadCorpus, RelationInvariants) {
  EXPECT_THROW(parse(R"({"tokens":["a","b"],"entities":[[0,0,"X"]],"relations":[[0,3,"R"]]})"), ValidationError);
  EXPECT_THROW(parse(R"({"tokens":["a","b"],"entities":[[0,0,"X"],[1,1,"X"]],"relations":[[0,0,"R"]]})"),
               ValidationError);
  EXPECT_THROW(parse(R"({"tokens":[]})"), ValidationError);
}

TEST(ReadCorpus, RoundTrip) {
  const auto corpus = synthetic::generate(20, 5, synthetic::Kind::kCompositional);
  std::ostringstream out;
  write_corpus_stream(out, corpus);
  std::istringstream in(out.str());
  const auto back = read_corpus_stream(in, "rt");
  ASSERT_EQ(back.size(), corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    EXPECT_EQ(back[i].id, corpus[i].id);
    EXPECT_EQ(back[i].tokens, corpus[i].tokens);
    EXPECT_EQ(back[i].entities, corpus[i].entities);
    EXPECT_EQ(back[i].relations, corpus[i].relations);
  }
}

TEST(EnumerateSpans, SmallCase) {
  const std::vector<Span> expect{{0, 0}, {0, 1}, {1, 1}, {1, 2}, {2, 2}};
  EXPECT_EQ(enumerate_spans(3, 2), expect);
  EXPECT_EQ(enumerate_spans(1, 12), (std::vector<Span>{{0, 0}}));
  EXPECT_THROW(enumerate_spans(3, 0), ValidationError);
}

TEST(EnumerateSpans, CountMatchesBruteForce) {
  for (int len = 1; len <= 30; ++len) {
    for (int w = 1; w <= 14; ++w) {
      std::size_t count = 0;
      for (int i = 0; i < len; ++i)
        for (int j = i; j < len; ++j)
          if (j - i + 1 <= w) ++count;
      const auto spans = enumerate_spans(len, w);
      ASSERT_EQ(spans.size(), count);
      EXPECT_TRUE(std::is_sorted(spans.begin(), spans.end()));
      EXPECT_EQ(std::set<Span>(spans.begin(), spans.end()).size(), spans.size());
    }
  }
}

TEST(EnumerateSpans, DefaultWidthIsTwelve) {
  Config c;
  EXPECT_EQ(c.get_int("data.max_span_width"), 12);
}

class GoldAssignmentTest : public ::testing::Test {
 protected:
  Sentence s = parse(
      R"({"tokens":["John","lives","in","Paris"],"entities":[[0,0,"Peop"],[3,3,"Loc"]],"relations":[[0,1,"Live_In"]]})")[0];
  LabelSchema schema = LabelSchema::from_corpus({s});
};

TEST_F(GoldAssignmentTest, NodeLabels) {
  const auto spans = enumerate_spans(s, 12);
  const auto g = gold_assignment(s, spans, schema);
  for (std::size_t i = 0; i < spans.size(); ++i) {
    if (spans[i] == Span{0, 0}) {
      EXPECT_EQ(schema.entity_types()[static_cast<std::size_t>(g.node_labels[i])], "Peop");
      EXPECT_EQ(g.node_indicator[i], 1.0);
    } else if (spans[i] == Span{1, 1}) {
      EXPECT_EQ(schema.entity_types()[static_cast<std::size_t>(g.node_labels[i])], kNonEntity);
      EXPECT_EQ(g.node_indicator[i], 0.0);
    }
  }
}

TEST_F(GoldAssignmentTest, EdgesAreDirected) {
  const auto g = gold_assignment(s, enumerate_spans(s, 12), schema);
  EXPECT_EQ(schema.relation_types()[static_cast<std::size_t>(g.edge_label({0, 0}, {3, 3}))], "Live_In");
  EXPECT_EQ(g.edge_label({3, 3}, {0, 0}), 0);
  EXPECT_EQ(schema.relation_types()[0], kNoRelation);
}

TEST(GoldAssignment, WideEntityIsUnreachable) {
  Sentence s;
  for (int i = 0; i < 15; ++i) s.tokens.push_back("w" + std::to_string(i));
  s.entities = {{{0, 12}, "Org"}, {{14, 14}, "Loc"}};
  s.relations = {{0, 1, "Based_In"}};
  const LabelSchema schema = LabelSchema::from_corpus({s});
  const auto spans = enumerate_spans(s, 12);
  const auto g = gold_assignment(s, spans, schema);
  EXPECT_EQ(g.unreachable_entities, 1);
  EXPECT_EQ(g.unreachable_relations, 1);
  // Recall ceiling: reachable gold spans over all gold spans, by enumeration.
  int reachable = 0;
  for (const auto &e : s.entities)
    reachable += std::find(spans.begin(), spans.end(), e.span) != spans.end();
  EXPECT_EQ(reachable, 1);
  EXPECT_EQ(std::count(g.node_indicator.begin(), g.node_indicator.end(), 1.0), reachable);
}

TEST(LabelSchema, ReservedClassesAndCounts) {
  const LabelSchema conll({"Loc", "Org", "Peop", "Other"}, {"Kill", "Live_In", "Located_In", "OrgBased_In", "Work_For"});
  EXPECT_EQ(conll.num_entity_classes(), 4 + 1);
  EXPECT_EQ(conll.num_relation_classes(), 5 + 1);
  EXPECT_EQ(conll.entity_index(kNonEntity), 0);
  EXPECT_EQ(conll.relation_index(kNoRelation), 0);
  EXPECT_THROW(conll.entity_index("Weapon"), ValidationError);
}

TEST(ConvertNested, DocumentOffsetsBecomeSentenceOffsets) {
  nlohmann::json doc = nlohmann::json::parse(R"({
    "doc_key": "d1",
    "sentences": [["Anna", "works", "for", "Acme"], ["Acme", "is", "in", "Lima"]],
    "ner": [[[0, 0, "Per"], [3, 3, "Org"]], [[4, 4, "Org"], [7, 7, "Loc"]]],
    "relations": [[[0, 0, 3, 3, "Work_For"]], [[4, 4, 7, 7, "Based_In"]]]
  })");
  const auto out = convert_nested_document(doc, "doc");
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[1].id, "d1#1");
  EXPECT_EQ(out[1].entities[0].span, (Span{0, 0}));
  EXPECT_EQ(out[1].entities[1].span, (Span{3, 3}));
  ASSERT_EQ(out[1].relations.size(), 1u);
  EXPECT_EQ(out[1].relations[0].type, "Based_In");
}

TEST(ConvertNested, UnknownFormat) {
  EXPECT_THROW(convert_nested_document(nlohmann::json::parse(R"({"text": "x"})"), "doc"), ParseError);
}

TEST(Config, UnknownKeyListsValidKeys) {
  Config c;
  try {
    c.set("gt.backbone", "x");
    FAIL();
  } catch (const ConfigError &e) {
    EXPECT_NE(std::string(e.what()).find("gt.backend"), std::string::npos);
  }
}

TEST(Config, ValidationAndHash) {
  Config c;
  EXPECT_NO_THROW(c.validate());
  EXPECT_THROW(c.set("gt.backend", "mlp"), ConfigError);
  Config d = c;
  d.set("decode.threshold", "0.7");
  EXPECT_EQ(c.model_hash(), d.model_hash());
  d.set("gt.layers", "3");
  EXPECT_NE(c.model_hash(), d.model_hash());
  Config odd;
  odd.set("encoder.hidden_size", "63");
  EXPECT_THROW(odd.validate(), ConfigError);
  const Config back = Config::from_json(d.to_json());
  EXPECT_EQ(back.to_json().dump(), d.to_json().dump());
}

TEST(Synthetic, SeededAndWithinVocabulary) {
  const auto a = synthetic::generate(32, 1, synthetic::Kind::kBasic);
  const auto b = synthetic::generate(32, 1, synthetic::Kind::kBasic);
  std::set<std::string> words, etypes, rtypes;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].tokens, b[i].tokens);
    EXPECT_NO_THROW(validate_sentence(a[i], a[i].id));
    words.insert(a[i].tokens.begin(), a[i].tokens.end());
    for (const auto &e : a[i].entities) etypes.insert(e.type);
    for (const auto &r : a[i].relations) rtypes.insert(r.type);
  }
  EXPECT_LE(words.size(), synthetic::vocabulary_size(synthetic::Kind::kBasic));
  EXPECT_EQ(synthetic::vocabulary_size(synthetic::Kind::kBasic), 50u);
  EXPECT_EQ(etypes.size(), 2u);
  EXPECT_EQ(rtypes.size(), 2u);
}

}  // namespace
}  // namespace spangraph
