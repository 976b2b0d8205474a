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

// Rendered artifacts: SVG heat maps for confusion matrices and attention
// maps, and the attention-inspection record.

#ifndef SPANGRAPH_REPORT_HPP_
#define SPANGRAPH_REPORT_HPP_

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "spangraph/metrics.hpp"
#include "spangraph/model.hpp"

namespace spangraph {

inline std::string xml_escape(const std::string &s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

struct Heatmap {
  std::string title;
  Matrix values;
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  bool show_values = false;
};

// Heat maps laid out left to right in one SVG. Cell shade is the value
// relative to the panel maximum.
inline std::string render_heatmaps_svg(const std::vector<Heatmap> &panels) {
  constexpr int cell = 28, left = 150, top = 130, gap = 60;
  int width = 10, height = 0;
  for (const auto &p : panels) {
    width += left + cell * static_cast<int>(p.values.cols()) + gap;
    height = std::max(height, top + cell * static_cast<int>(p.values.rows()) + 20);
  }
  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  int x0 = 10;
  char buf[64];
  for (const auto &p : panels) {
    const double mx = p.values.size() ? std::max(p.values.maxCoeff(), 1e-12) : 1.0;
    svg << "<text x=\"" << x0 << "\" y=\"16\" font-size=\"13\">" << xml_escape(p.title) << "</text>\n";
    for (Index c = 0; c < p.values.cols(); ++c) {
      const int x = x0 + left + cell * static_cast<int>(c) + cell / 2;
      svg << "<text transform=\"translate(" << x << "," << top - 6 << ") rotate(-60)\">"
          << xml_escape(p.col_labels[static_cast<std::size_t>(c)]) << "</text>\n";
    }
    for (Index r = 0; r < p.values.rows(); ++r) {
      const int y = top + cell * static_cast<int>(r);
      svg << "<text x=\"" << x0 + left - 6 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"end\">"
          << xml_escape(p.row_labels[static_cast<std::size_t>(r)]) << "</text>\n";
      for (Index c = 0; c < p.values.cols(); ++c) {
        const double v = p.values(r, c);
        const int shade = 255 - static_cast<int>(std::clamp(v / mx, 0.0, 1.0) * 200.0);
        const int x = x0 + left + cell * static_cast<int>(c);
        svg << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\"" << cell
            << "\" fill=\"rgb(" << shade << "," << shade << ",255)\" stroke=\"#ccc\"/>\n";
        if (p.show_values) {
          std::snprintf(buf, sizeof buf, "%g", v);
          svg << "<text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4 << "\" text-anchor=\"middle\">"
              << buf << "</text>\n";
        }
      }
    }
    x0 += left + cell * static_cast<int>(p.values.cols()) + gap;
  }
  svg << "</svg>\n";
  return svg.str();
}

inline Heatmap confusion_heatmap(const ConfusionMatrix &m, const std::string &title) {
  Heatmap h;
  h.title = title;
  h.row_labels = m.rows();
  h.col_labels = m.cols();
  h.values = Matrix::Zero(static_cast<Index>(h.row_labels.size()), static_cast<Index>(h.col_labels.size()));
  for (std::size_t r = 0; r < h.row_labels.size(); ++r)
    for (std::size_t c = 0; c < h.col_labels.size(); ++c)
      h.values(static_cast<Index>(r), static_cast<Index>(c)) = static_cast<double>(m.at(h.row_labels[r], h.col_labels[c]));
  h.show_values = true;
  return h;
}

// Token labels: a node reads "[k] span text" and an edge "[k]->[j]", with k
// the node's identifier row.
inline std::vector<std::string> graph_token_labels(const Sentence &s, const InitialGraph &g,
                                                   const std::vector<Index> &assignment) {
  std::vector<std::string> labels;
  for (int n = 0; n < g.num_nodes(); ++n) {
    const Span sp = g.node_spans[static_cast<std::size_t>(n)];
    std::string text;
    for (int t = sp.start; t <= sp.end; ++t) text += (t > sp.start ? " " : "") + s.tokens[static_cast<std::size_t>(t)];
    labels.push_back("[" + std::to_string(assignment[static_cast<std::size_t>(n)]) + "] " + text);
  }
  for (const auto &e : g.edges) {
    labels.push_back("[" + std::to_string(assignment[static_cast<std::size_t>(e.source)]) + "]->[" +
                     std::to_string(assignment[static_cast<std::size_t>(e.target)]) + "]");
  }
  return labels;
}

inline std::vector<int> top_indices(const std::vector<double> &scores, int n) {
  std::vector<int> idx(scores.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&scores](int a, int b) {
    return scores[static_cast<std::size_t>(a)] > scores[static_cast<std::size_t>(b)];
  });
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(std::max(n, 0))));
  return idx;
}

struct AttentionArtifact {
  nlohmann::ordered_json record;
  std::string svg;
};

// Attention of every layer and head for one sentence. The record keeps the
// full matrices (rows sum to 1) and names the top-n nodes and top-n edges
// by keep probability; the rendered view shows the head-averaged
// attention restricted to those tokens, one panel per layer.
inline AttentionArtifact emit_attention(const Model &model, const Sentence &s, int top_n = 3) {
  if (!model.uses_transformer()) {
    throw UnsupportedError("attention inspection needs the transformer backend (model uses " +
                           model.settings().backend + ")");
  }
  if (top_n < 1) throw ValidationError("top_n must be at least 1");
  ag::NoGradGuard no_grad;
  ForwardOptions opt;
  opt.capture_attention = true;
  const ForwardResult r = model.forward(s, opt);
  const InitialGraph &g = r.graph();
  const KeepProbabilities keep = r.keep();
  const auto labels = graph_token_labels(s, g, r.assignment);

  std::vector<int> selected;
  for (int n : top_indices(keep.node_keep, top_n)) selected.push_back(n);
  for (int e : top_indices(keep.edge_keep, top_n)) selected.push_back(g.num_nodes() + e);

  AttentionArtifact art;
  auto &j = art.record;
  j["sentence"] = s.id;
  j["tokens"] = s.tokens;
  j["token_labels"] = labels;
  std::vector<double> keep_all = keep.node_keep;
  keep_all.insert(keep_all.end(), keep.edge_keep.begin(), keep.edge_keep.end());
  j["keep_probability"] = keep_all;
  j["top_n"] = top_n;
  j["selected"] = selected;
  std::vector<std::string> sel_labels;
  for (int i : selected) sel_labels.push_back(labels[static_cast<std::size_t>(i)]);
  j["selected_labels"] = sel_labels;

  auto to_rows = [](const Matrix &m) {
    std::vector<std::vector<double>> rows(static_cast<std::size_t>(m.rows()));
    for (Index i = 0; i < m.rows(); ++i)
      for (Index k = 0; k < m.cols(); ++k) rows[static_cast<std::size_t>(i)].push_back(m(i, k));
    return rows;
  };
  std::vector<Heatmap> panels;
  auto layers = nlohmann::ordered_json::array();
  for (std::size_t l = 0; l < r.attention.size(); ++l) {
    nlohmann::ordered_json lj;
    lj["layer"] = l;
    auto heads = nlohmann::ordered_json::array();
    Matrix mean = Matrix::Zero(r.attention[l][0].rows(), r.attention[l][0].cols());
    for (const auto &h : r.attention[l]) {
      heads.push_back(to_rows(h));
      mean += h / static_cast<double>(r.attention[l].size());
    }
    lj["heads"] = heads;
    Matrix sub(static_cast<Index>(selected.size()), static_cast<Index>(selected.size()));
    for (std::size_t a = 0; a < selected.size(); ++a)
      for (std::size_t b = 0; b < selected.size(); ++b)
        sub(static_cast<Index>(a), static_cast<Index>(b)) = mean(selected[a], selected[b]);
    lj["selected_mean"] = to_rows(sub);
    layers.push_back(lj);
    panels.push_back({"layer " + std::to_string(l) + " (mean over heads)", sub, sel_labels, sel_labels, false});
  }
  j["layers"] = layers;
  art.svg = render_heatmaps_svg(panels);
  return art;
}

}  // namespace spangraph

#endif  // SPANGRAPH_REPORT_HPP_
