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

// Seeded generators for small labelled corpora with known structure.
//
//  basic          2 entity types (Per, Loc), 2 relation types (Live_In,
//                 Born_In) chosen by a trigger word; 50-word vocabulary.
//  compositional  3 entity types (Per, Org, Loc), 3 relation types. A person
//                 working for an organisation based somewhere also lives
//                 there, so some Live_In edges only follow from two others.

#ifndef SPANGRAPH_SYNTHETIC_HPP_
#define SPANGRAPH_SYNTHETIC_HPP_

#include <random>
#include <set>
#include <string>
#include <vector>

#include "spangraph/corpus.hpp"

namespace spangraph::synthetic {

enum class Kind { kBasic, kCompositional };

inline Kind parse_kind(const std::string &s) {
  if (s == "basic") return Kind::kBasic;
  if (s == "compositional") return Kind::kCompositional;
  throw ValidationError("unknown synthetic corpus kind '" + s + "' (basic|compositional)");
}

namespace detail {

struct Builder {
  Sentence s;
  std::mt19937_64 &rng;

  explicit Builder(std::mt19937_64 &r) : rng(r) {}

  template <class T>
  const T &pick(const std::vector<T> &v) {
    return v[std::uniform_int_distribution<std::size_t>(0, v.size() - 1)(rng)];
  }
  bool coin(double p) { return std::bernoulli_distribution(p)(rng); }

  void word(const std::string &w) { s.tokens.push_back(w); }

  // Emits a 1- or 2-word mention drawn without repeating a word in the
  // sentence, returning the entity index.
  int mention(const std::vector<std::string> &words, const std::string &type,
              double two_word = 0.3) {
    const int start = s.length();
    const int n = coin(two_word) ? 2 : 1;
    for (int i = 0; i < n; ++i) {
      std::string w;
      do {
        w = pick(words);
      } while (used.count(w));
      used.insert(w);
      word(w);
    }
    s.entities.push_back({{start, s.length() - 1}, type});
    return static_cast<int>(s.entities.size()) - 1;
  }

  void relation(int h, int t, const std::string &type) { s.relations.push_back({h, t, type}); }

  std::set<std::string> used;
};

inline const std::vector<std::string> kPersons = {
    "anna", "boris", "chen", "dana", "emil", "farah", "gus", "hana", "ivo", "jun"};
inline const std::vector<std::string> kPlaces = {
    "paris", "lima", "oslo", "cairo", "quito", "riga", "dakar", "hanoi", "perth", "tunis"};
inline const std::vector<std::string> kLiveTriggers = {"lives", "resides", "stays"};
inline const std::vector<std::string> kBornTriggers = {"born", "raised", "grew"};
inline const std::vector<std::string> kFillers = {
    "the", "a", "said", "that", "yesterday", "today", "reportedly", "now", "still",
    "also", "then", "friend", "visitor", "people", "news", "report", "often",
    "was", "is", "and", "in", "near", "of", "with"};

inline Sentence basic_sentence(std::mt19937_64 &rng) {
  Builder b(rng);
  const std::vector<std::string> openers = {"the", "a", "yesterday", "today", "reportedly", "news", "report"};
  if (b.coin(0.5)) b.word(b.pick(openers));
  if (b.coin(0.3)) b.word(b.pick(std::vector<std::string>{"said", "that", "now"}));
  const int clauses = b.coin(0.45) ? 2 : 1;
  for (int c = 0; c < clauses; ++c) {
    if (c > 0) b.word(b.pick(std::vector<std::string>{"and", "then", "also"}));
    const int person = b.mention(kPersons, "Per");
    if (b.coin(0.3)) b.word(b.pick(std::vector<std::string>{"still", "often", "also"}));
    const bool live = b.coin(0.5);
    if (!live) b.word(b.pick(std::vector<std::string>{"was", "is"}));
    b.word(b.pick(live ? kLiveTriggers : kBornTriggers));
    b.word(b.pick(std::vector<std::string>{"in", "near"}));
    const int place = b.mention(kPlaces, "Loc");
    b.relation(person, place, live ? "Live_In" : "Born_In");
  }
  if (b.coin(0.35)) {
    // Unrelated distractor mention.
    b.word(b.pick(std::vector<std::string>{"with", "of"}));
    b.word(b.pick(std::vector<std::string>{"friend", "visitor", "people"}));
    if (b.coin(0.5)) b.mention(kPersons, "Per");
    else b.mention(kPlaces, "Loc");
  }
  if (b.coin(0.3)) b.word(b.pick(std::vector<std::string>{"today", "yesterday", "then"}));
  return b.s;
}

inline const std::vector<std::string> kCompPersons = {"anna", "boris", "chen", "dana", "emil", "farah", "gus", "hana"};
inline const std::vector<std::string> kCompOrgs = {"acme", "globex", "initech", "umbra", "vortex", "zenith", "cobalt", "orbit"};
inline const std::vector<std::string> kCompPlaces = {"paris", "lima", "oslo", "cairo", "quito", "riga", "dakar", "hanoi"};

inline Sentence compositional_sentence(std::mt19937_64 &rng) {
  Builder b(rng);
  if (b.coin(0.4)) b.word(b.pick(std::vector<std::string>{"the", "reportedly", "today", "news"}));
  const int pattern = std::uniform_int_distribution<int>(0, 5)(rng);
  switch (pattern) {
    case 0:
    case 1: {
      // person -> org -> place; the person lives where the org is based.
      const int p = b.mention(kCompPersons, "Per", 0.2);
      b.word("works");
      b.word("for");
      const int o = b.mention(kCompOrgs, "Org", 0.2);
      b.word(b.pick(std::vector<std::string>{"which", "that"}));
      b.word("is");
      b.word("based");
      b.word("in");
      const int l = b.mention(kCompPlaces, "Loc", 0.2);
      b.relation(p, o, "Work_For");
      b.relation(o, l, "Based_In");
      b.relation(p, l, "Live_In");
      break;
    }
    case 2: {
      const int o = b.mention(kCompOrgs, "Org", 0.2);
      b.word(b.pick(std::vector<std::string>{"hired", "employs"}));
      const int p = b.mention(kCompPersons, "Per", 0.2);
      b.word("in");
      const int l = b.mention(kCompPlaces, "Loc", 0.2);
      b.relation(p, o, "Work_For");
      b.relation(o, l, "Based_In");
      b.relation(p, l, "Live_In");
      break;
    }
    case 3: {
      const int p = b.mention(kCompPersons, "Per", 0.2);
      b.word(b.pick(std::vector<std::string>{"lives", "resides"}));
      b.word("in");
      const int l = b.mention(kCompPlaces, "Loc", 0.2);
      b.relation(p, l, "Live_In");
      if (b.coin(0.5)) {
        b.word("and");
        b.word("visits");
        b.mention(kCompOrgs, "Org", 0.2);
      }
      break;
    }
    case 4: {
      const int o = b.mention(kCompOrgs, "Org", 0.2);
      b.word("is");
      b.word("based");
      b.word("in");
      const int l = b.mention(kCompPlaces, "Loc", 0.2);
      b.relation(o, l, "Based_In");
      if (b.coin(0.5)) {
        b.word("near");
        b.mention(kCompPersons, "Per", 0.2);
      }
      break;
    }
    default: {
      const int p = b.mention(kCompPersons, "Per", 0.2);
      b.word("works");
      b.word("for");
      const int o = b.mention(kCompOrgs, "Org", 0.2);
      b.relation(p, o, "Work_For");
      if (b.coin(0.5)) {
        b.word("but");
        b.word("visits");
        b.mention(kCompPlaces, "Loc", 0.2);
      }
      break;
    }
  }
  if (b.coin(0.3)) b.word(b.pick(std::vector<std::string>{"today", "again", "now"}));
  return b.s;
}

}  // namespace detail

inline std::vector<Sentence> generate(int count, std::uint64_t seed, Kind kind = Kind::kBasic,
                                      const std::string &id_prefix = "syn") {
  std::mt19937_64 rng(seed);
  std::vector<Sentence> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    Sentence s = kind == Kind::kBasic ? detail::basic_sentence(rng)
                                      : detail::compositional_sentence(rng);
    s.id = id_prefix + "-" + std::to_string(i);
    validate_sentence(s, s.id);
    out.push_back(std::move(s));
  }
  return out;
}

// Distinct words the generator can emit.
inline std::size_t vocabulary_size(Kind kind) {
  std::set<std::string> words;
  auto add = [&words](const std::vector<std::string> &v) { words.insert(v.begin(), v.end()); };
  if (kind == Kind::kBasic) {
    add(detail::kPersons);
    add(detail::kPlaces);
    add(detail::kLiveTriggers);
    add(detail::kBornTriggers);
    add(detail::kFillers);
  } else {
    add(detail::kCompPersons);
    add(detail::kCompOrgs);
    add(detail::kCompPlaces);
    add({"the", "reportedly", "today", "news", "works", "for", "which", "that", "is",
         "based", "in", "hired", "employs", "lives", "resides", "and", "visits", "near",
         "but", "again", "now"});
  }
  return words.size();
}

}  // namespace spangraph::synthetic

#endif  // SPANGRAPH_SYNTHETIC_HPP_
