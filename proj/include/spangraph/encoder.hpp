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

#ifndef SPANGRAPH_ENCODER_HPP_
#define SPANGRAPH_ENCODER_HPP_

#include <algorithm>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "spangraph/corpus.hpp"
#include "spangraph/nn.hpp"

namespace spangraph {

using ag::Index;
using ag::Matrix;
using ag::Var;

// Word vocabulary of the toy backbone. Id 0 is <unk>; the remaining words are
// ordered by descending training frequency, then lexicographically.
class TokenVocab {
 public:
  TokenVocab() : words_{"<unk>"} {}

  static TokenVocab from_corpus(const std::vector<Sentence> &corpus, std::size_t max_size) {
    std::map<std::string, std::size_t> freq;
    for (const auto &s : corpus)
      for (const auto &t : s.tokens) ++freq[t];
    std::vector<std::pair<std::string, std::size_t>> items(freq.begin(), freq.end());
    std::stable_sort(items.begin(), items.end(),
                     [](const auto &a, const auto &b) { return a.second > b.second; });
    TokenVocab v;
    for (const auto &[w, n] : items) {
      if (v.words_.size() >= std::max<std::size_t>(max_size, 1)) break;
      v.words_.push_back(w);
    }
    v.rebuild();
    return v;
  }

  static TokenVocab from_words(std::vector<std::string> words) {
    TokenVocab v;
    v.words_ = std::move(words);
    if (v.words_.empty() || v.words_.front() != "<unk>") {
      throw ValidationError("token vocabulary must start with <unk>");
    }
    v.rebuild();
    return v;
  }

  Index id(const std::string &w) const {
    auto it = ids_.find(w);
    return it == ids_.end() ? 0 : it->second;
  }
  std::vector<Index> ids(const std::vector<std::string> &tokens) const {
    std::vector<Index> out;
    out.reserve(tokens.size());
    for (const auto &t : tokens) out.push_back(id(t));
    return out;
  }
  std::size_t size() const { return words_.size(); }
  const std::vector<std::string> &words() const { return words_; }

 private:
  void rebuild() {
    ids_.clear();
    for (std::size_t i = 0; i < words_.size(); ++i) ids_[words_[i]] = static_cast<Index>(i);
  }

  std::vector<std::string> words_;
  std::map<std::string, Index> ids_;
};

// External source of contextual token embeddings (a pretrained transformer
// behind some runtime). Implementations return one row per token.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;
  virtual Index width() const = 0;
  virtual Matrix embed(const std::vector<std::string> &tokens) const = 0;
};

using ProviderFactory = std::function<std::shared_ptr<EmbeddingProvider>(const std::string &id)>;

// Process-wide registry the adapter backbone resolves `encoder.adapter_id`
// against.
class ProviderRegistry {
 public:
  static ProviderRegistry &instance() {
    static ProviderRegistry r;
    return r;
  }
  void add(const std::string &id, ProviderFactory f) {
    std::lock_guard<std::mutex> lock(mu_);
    factories_[id] = std::move(f);
  }
  std::shared_ptr<EmbeddingProvider> create(const std::string &id) const {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = factories_.find(id);
    if (it == factories_.end()) {
      throw ConfigError("embedding adapter '" + id +
                        "' is unavailable in this build; set encoder.backbone=toy");
    }
    return it->second(id);
  }

 private:
  mutable std::mutex mu_;
  std::map<std::string, ProviderFactory> factories_;
};

struct EncoderConfig {
  std::string backbone = "toy";  // toy | adapter
  Index hidden = 64;
  Index heads = 8;
  Index max_positions = kDefaultMaxSentenceLength;
  std::string adapter_id;
  double dropout = 0.1;
};

// Produces contextual token embeddings H (L x D).
//
// toy:     embedding table + learned positions, mixed by one self-attention
//          block; trained end to end.
// adapter: external provider output projected to width D.
class TokenEncoder {
 public:
  TokenEncoder() = default;
  TokenEncoder(nn::ParameterStore &store, const EncoderConfig &cfg, const TokenVocab &vocab,
               std::mt19937_64 &rng)
      : cfg_(cfg), vocab_(vocab) {
    if (cfg.hidden <= 0 || cfg.hidden % 2 != 0) {
      throw ConfigError("encoder width must be positive and even");
    }
    if (cfg.backbone == "toy") {
      embed_ = store.add("encoder.embed",
                         nn::normal_matrix(static_cast<Index>(vocab.size()), cfg.hidden, 0.1, rng),
                         nn::Group::kBackbone);
      position_ = store.add("encoder.position",
                            nn::normal_matrix(cfg.max_positions, cfg.hidden, 0.1, rng),
                            nn::Group::kBackbone);
      mixer_ = nn::TransformerBlock(store, "encoder.mixer", cfg.hidden, cfg.heads, 4 * cfg.hidden,
                                    rng, nn::Group::kBackbone);
      norm_ = nn::LayerNorm(store, "encoder.norm", cfg.hidden, nn::Group::kBackbone);
    } else if (cfg.backbone == "adapter") {
      provider_ = ProviderRegistry::instance().create(cfg.adapter_id);
      project_ = nn::Linear(store, "encoder.project", provider_->width(), cfg.hidden, rng);
    } else {
      throw ConfigError("unknown encoder backbone '" + cfg.backbone + "'");
    }
  }

  Index width() const { return cfg_.hidden; }
  const TokenVocab &vocab() const { return vocab_; }

  Var operator()(const std::vector<std::string> &tokens, const nn::Context &ctx) const {
    const auto n = static_cast<Index>(tokens.size());
    if (n == 0) throw ValidationError("cannot encode an empty sentence");
    Var h;
    if (provider_) {
      Matrix raw = provider_->embed(tokens);
      if (raw.rows() != n) throw ValidationError("embedding provider returned wrong row count");
      h = project_(Var::constant(std::move(raw)));
    } else {
      if (n > cfg_.max_positions) {
        throw ValidationError("sentence of " + std::to_string(n) +
                              " tokens exceeds the backbone limit of " +
                              std::to_string(cfg_.max_positions));
      }
      const auto ids = vocab_.ids(tokens);
      std::vector<Index> pos(static_cast<std::size_t>(n));
      for (Index i = 0; i < n; ++i) pos[static_cast<std::size_t>(i)] = i;
      Var x = ag::add(ag::gather_rows(embed_, ids), ag::gather_rows(position_, pos));
      h = norm_(mixer_(ctx.drop(x), ctx));
    }
    if (!h.value().allFinite()) throw NumericError("token encoder produced non-finite embeddings");
    return h;
  }

 private:
  EncoderConfig cfg_;
  TokenVocab vocab_;
  Var embed_;
  Var position_;
  nn::TransformerBlock mixer_;
  nn::LayerNorm norm_;
  std::shared_ptr<EmbeddingProvider> provider_;
  nn::Linear project_;
};

// s_ij = FFN([h_i ; h_j]) with FFN: 2D -> D -> D.
class SpanRepresenter {
 public:
  SpanRepresenter() = default;
  SpanRepresenter(nn::ParameterStore &store, Index width, std::mt19937_64 &rng)
      : ffn_(store, "span.ffn", 2 * width, width, width, rng) {}

  const nn::FeedForward &ffn() const { return ffn_; }

  Var operator()(const Var &tokens, const std::vector<Span> &spans, const nn::Context &ctx) const {
    std::vector<Index> starts, ends;
    starts.reserve(spans.size());
    ends.reserve(spans.size());
    for (const auto &s : spans) {
      if (s.start < 0 || s.end < s.start || s.end >= tokens.rows()) {
        throw ValidationError("span [" + std::to_string(s.start) + "," + std::to_string(s.end) +
                              "] out of range for " + std::to_string(tokens.rows()) + " tokens");
      }
      starts.push_back(s.start);
      ends.push_back(s.end);
    }
    Var pair = ag::concat_cols({ag::gather_rows(tokens, starts), ag::gather_rows(tokens, ends)});
    return ffn_(pair, ctx);
  }

 private:
  nn::FeedForward ffn_;
};

}  // namespace spangraph

#endif  // SPANGRAPH_ENCODER_HPP_
