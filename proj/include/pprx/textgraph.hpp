#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "pprx/errors.hpp"

namespace pprx {

using NodeId = std::size_t;

inline constexpr int kDefaultWindow = 3;

// Normalized word occurrences in source order.
struct TokenSeq {
  std::vector<std::string> tokens;

  std::size_t size() const noexcept { return tokens.size(); }
  bool empty() const noexcept { return tokens.empty(); }
};

namespace detail {

// Decodes one UTF-8 code point starting at text[pos]. Invalid sequences are
// consumed one byte at a time and reported as U+FFFD.
inline char32_t decode_utf8(std::string_view text, std::size_t pos, std::size_t& length) {
  const auto lead = static_cast<unsigned char>(text[pos]);
  if (lead < 0x80) {
    length = 1;
    return lead;
  }
  std::size_t extra = 0;
  char32_t cp = 0;
  if ((lead & 0xE0) == 0xC0) {
    extra = 1;
    cp = lead & 0x1F;
  } else if ((lead & 0xF0) == 0xE0) {
    extra = 2;
    cp = lead & 0x0F;
  } else if ((lead & 0xF8) == 0xF0) {
    extra = 3;
    cp = lead & 0x07;
  } else {
    length = 1;
    return 0xFFFD;
  }
  if (pos + extra >= text.size()) {
    length = 1;
    return 0xFFFD;
  }
  for (std::size_t i = 1; i <= extra; ++i) {
    const auto c = static_cast<unsigned char>(text[pos + i]);
    if ((c & 0xC0) != 0x80) {
      length = 1;
      return 0xFFFD;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  length = extra + 1;
  return cp;
}

inline bool is_apostrophe(char32_t cp) { return cp == U'\'' || cp == U'’'; }

// ASCII letters/digits, plus any non-ASCII code point outside the common
// punctuation, symbol and whitespace blocks.
inline bool is_word_char(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'a' && cp <= U'z') || (cp >= U'A' && cp <= U'Z') || (cp >= U'0' && cp <= U'9');
  }
  if (cp == 0xFFFD) return false;
  if (cp >= 0x80 && cp <= 0xBF) return false;      // Latin-1 controls, punctuation, symbols
  if (cp == 0xD7 || cp == 0xF7) return false;      // multiplication and division signs
  if (cp >= 0x2000 && cp <= 0x2BFF) return false;  // general punctuation through misc symbols
  if (cp >= 0x3000 && cp <= 0x303F) return false;  // CJK punctuation
  if (cp >= 0xFE30 && cp <= 0xFE4F) return false;
  if (cp >= 0xFF00 && cp <= 0xFF0F) return false;
  if (cp >= 0x1F000 && cp <= 0x1FAFF) return false;  // emoji
  return true;
}

}  // namespace detail

// Lowercased maximal runs of word characters. An apostrophe (ASCII or U+2019)
// is kept only when it sits between two word characters; U+2019 is
// normalized to ASCII. Case folding is ASCII-only. Stop words are kept.
inline TokenSeq tokenize(std::string_view text) {
  TokenSeq seq;
  std::string current;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t len = 1;
    const char32_t cp = detail::decode_utf8(text, pos, len);
    if (detail::is_word_char(cp)) {
      if (cp < 0x80) {
        char c = static_cast<char>(cp);
        if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        current.push_back(c);
      } else {
        current.append(text.substr(pos, len));
      }
    } else if (detail::is_apostrophe(cp) && !current.empty() && pos + len < text.size()) {
      std::size_t next_len = 1;
      const char32_t next = detail::decode_utf8(text, pos + len, next_len);
      if (detail::is_word_char(next)) {
        current.push_back('\'');
      } else {
        seq.tokens.push_back(std::move(current));
        current.clear();
      }
    } else if (!current.empty()) {
      seq.tokens.push_back(std::move(current));
      current.clear();
    }
    pos += len;
  }
  if (!current.empty()) seq.tokens.push_back(std::move(current));
  if (seq.tokens.empty()) throw Error(ErrorKind::EmptyDocument, "text contains no word characters");
  return seq;
}

// Undirected, unweighted co-occurrence graph of one document. Node ids are
// dense; adjacency is stored in compressed sparse rows with sorted neighbor
// lists. Immutable once built.
class WordGraph {
 public:
  WordGraph() = default;

  // Builds from distinct words and an undirected edge list. Duplicate edges
  // collapse, self-loops are dropped.
  static WordGraph from_edges(std::vector<std::string> words, std::vector<std::pair<NodeId, NodeId>> edges) {
    WordGraph g;
    g.words_ = std::move(words);
    for (NodeId i = 0; i < g.words_.size(); ++i) {
      auto [it, inserted] = g.index_of_.emplace(g.words_[i], i);
      if (!inserted) throw Error(ErrorKind::InvalidArgument, "duplicate word '" + g.words_[i] + "'");
    }
    const std::size_t n = g.words_.size();
    std::vector<std::pair<NodeId, NodeId>> arcs;
    arcs.reserve(edges.size() * 2);
    for (auto [a, b] : edges) {
      if (a >= n || b >= n) throw Error(ErrorKind::InvalidArgument, "edge endpoint out of range");
      if (a == b) continue;
      arcs.emplace_back(a, b);
      arcs.emplace_back(b, a);
    }
    std::sort(arcs.begin(), arcs.end());
    arcs.erase(std::unique(arcs.begin(), arcs.end()), arcs.end());
    g.offsets_.assign(n + 1, 0);
    g.neighbors_.reserve(arcs.size());
    for (auto [a, b] : arcs) {
      ++g.offsets_[a + 1];
      g.neighbors_.push_back(b);
    }
    for (std::size_t i = 0; i < n; ++i) g.offsets_[i + 1] += g.offsets_[i];
    return g;
  }

  std::size_t num_nodes() const noexcept { return words_.size(); }
  std::size_t num_edges() const noexcept { return neighbors_.size() / 2; }

  const std::vector<std::string>& words() const noexcept { return words_; }
  const std::string& word(NodeId i) const { return words_.at(i); }

  std::optional<NodeId> index_of(const std::string& word) const {
    auto it = index_of_.find(word);
    if (it == index_of_.end()) return std::nullopt;
    return it->second;
  }

  std::size_t degree(NodeId i) const { return offsets_[i + 1] - offsets_[i]; }

  std::span<const NodeId> neighbors(NodeId i) const {
    return {neighbors_.data() + offsets_[i], offsets_[i + 1] - offsets_[i]};
  }

  bool has_edge(NodeId a, NodeId b) const {
    auto nb = neighbors(a);
    return std::binary_search(nb.begin(), nb.end(), b);
  }

  // Each undirected edge once, as (low, high), in ascending order.
  std::vector<std::pair<NodeId, NodeId>> edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(num_edges());
    for (NodeId a = 0; a < num_nodes(); ++a)
      for (NodeId b : neighbors(a))
        if (a < b) out.emplace_back(a, b);
    return out;
  }

  bool operator==(const WordGraph& other) const {
    return words_ == other.words_ && offsets_ == other.offsets_ && neighbors_ == other.neighbors_;
  }

 private:
  std::vector<std::string> words_;
  std::unordered_map<std::string, NodeId> index_of_;
  std::vector<std::size_t> offsets_{0};
  std::vector<NodeId> neighbors_;
};

// Sorted, duplicate-free set of node ids to mask.
class MaskSet {
 public:
  MaskSet() = default;
  MaskSet(std::initializer_list<NodeId> ids) : MaskSet(std::vector<NodeId>(ids)) {}
  explicit MaskSet(std::vector<NodeId> ids) : ids_(std::move(ids)) {
    std::sort(ids_.begin(), ids_.end());
    ids_.erase(std::unique(ids_.begin(), ids_.end()), ids_.end());
  }

  bool empty() const noexcept { return ids_.empty(); }
  std::size_t size() const noexcept { return ids_.size(); }
  bool contains(NodeId id) const { return std::binary_search(ids_.begin(), ids_.end(), id); }
  const std::vector<NodeId>& ids() const noexcept { return ids_; }
  auto begin() const noexcept { return ids_.begin(); }
  auto end() const noexcept { return ids_.end(); }

  // Throws InvalidMask when empty or when an id is not a node of an n-node graph.
  void validate(std::size_t n) const {
    if (ids_.empty()) throw Error(ErrorKind::InvalidMask, "mask set is empty");
    if (ids_.back() >= n)
      throw Error(ErrorKind::InvalidMask,
                  "node id " + std::to_string(ids_.back()) + " out of range for " + std::to_string(n) + " nodes");
  }

 private:
  std::vector<NodeId> ids_;
};

// One node per distinct token (first-occurrence order). Every pair of
// distinct words appearing within a sliding window of k consecutive tokens
// is joined by an edge.
inline WordGraph build_word_graph(const TokenSeq& tokens, int k = kDefaultWindow) {
  if (tokens.empty()) throw Error(ErrorKind::EmptyDocument, "no tokens");
  if (k < 2) throw Error(ErrorKind::InvalidArgument, "window size must be at least 2");

  std::vector<std::string> words;
  std::unordered_map<std::string_view, NodeId> ids;
  std::vector<NodeId> sequence;
  sequence.reserve(tokens.size());
  for (const auto& tok : tokens.tokens) {
    auto it = ids.find(tok);
    if (it == ids.end()) {
      it = ids.emplace(tok, words.size()).first;
      words.push_back(tok);
    }
    sequence.push_back(it->second);
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  const auto span = static_cast<std::size_t>(k);
  for (std::size_t t = 0; t < sequence.size(); ++t) {
    const std::size_t stop = std::min(sequence.size(), t + span);
    for (std::size_t u = t + 1; u < stop; ++u) {
      const NodeId a = sequence[t];
      const NodeId b = sequence[u];
      if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
    }
  }
  return WordGraph::from_edges(std::move(words), std::move(edges));
}

// Same node set, with every edge incident to a masked node removed.
inline WordGraph mask_nodes(const WordGraph& graph, const MaskSet& mask) {
  mask.validate(graph.num_nodes());
  std::vector<std::pair<NodeId, NodeId>> kept;
  for (auto [a, b] : graph.edges())
    if (!mask.contains(a) && !mask.contains(b)) kept.emplace_back(a, b);
  return WordGraph::from_edges(graph.words(), std::move(kept));
}

}  // namespace pprx
