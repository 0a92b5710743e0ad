#pragma once

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <istream>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

#include "pprx/errors.hpp"

namespace pprx {

// FNV-1a, 64-bit, over the raw UTF-8 bytes.
inline std::uint64_t fnv1a64(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

// Deterministic vector for words missing from the pretrained vocabulary.
//
// A std::mt19937_64 engine is seeded with fnv1a64(word) XOR
// (seed * 0x9E3779B97F4A7C15). Entry j takes the j-th 64-bit draw x and maps
// it to ((x >> 11) * 2^-53 - 0.5) / d, which lies in [-0.5/d, 0.5/d).
inline Eigen::VectorXd fallback_vector(std::string_view word, int d, std::uint64_t seed) {
  if (d < 1) throw Error(ErrorKind::InvalidArgument, "embedding dimension must be positive");
  std::mt19937_64 engine(fnv1a64(word) ^ (seed * 0x9E3779B97F4A7C15ULL));
  Eigen::VectorXd v(d);
  const double scale = 1.0 / static_cast<double>(d);
  for (int j = 0; j < d; ++j) {
    const double unit = static_cast<double>(engine() >> 11) * 0x1.0p-53;
    v[j] = (unit - 0.5) * scale;
  }
  return v;
}

// Pretrained word vectors with a hash-seeded fallback for unknown words.
// Vectors are held as float, the native precision of word2vec files.
class EmbeddingStore {
 public:
  EmbeddingStore() = default;

  // A store with no vocabulary; every lookup is a fallback vector.
  EmbeddingStore(int dim, std::uint64_t fallback_seed, std::string source_meta = "fallback-only")
      : dim_(dim), fallback_seed_(fallback_seed), source_meta_(std::move(source_meta)) {
    if (dim < 1) throw Error(ErrorKind::InvalidArgument, "embedding dimension must be positive");
  }

  int dim() const noexcept { return dim_; }
  std::uint64_t fallback_seed() const noexcept { return fallback_seed_; }
  const std::string& source_meta() const noexcept { return source_meta_; }
  std::size_t vocab_size() const noexcept { return index_.size(); }
  bool contains(const std::string& word) const { return index_.count(word) != 0; }

  // Returns false if the word was already present (first occurrence wins).
  bool insert(const std::string& word, std::span<const float> values) {
    if (static_cast<int>(values.size()) != dim_)
      throw Error(ErrorKind::Shape, "vector for '" + word + "' has " + std::to_string(values.size()) +
                                        " entries, expected " + std::to_string(dim_));
    auto [it, inserted] = index_.emplace(word, values_.size() / static_cast<std::size_t>(dim_));
    if (inserted) values_.insert(values_.end(), values.begin(), values.end());
    return inserted;
  }

  Eigen::VectorXd lookup(const std::string& word) const {
    auto it = index_.find(word);
    if (it == index_.end()) return fallback_vector(word, dim_, fallback_seed_);
    const float* row = values_.data() + it->second * static_cast<std::size_t>(dim_);
    Eigen::VectorXd v(dim_);
    for (int j = 0; j < dim_; ++j) v[j] = row[j];
    return v;
  }

  // Node-feature matrix: one row per word.
  Eigen::MatrixXd features(const std::vector<std::string>& words) const {
    Eigen::MatrixXd x(static_cast<Eigen::Index>(words.size()), dim_);
    for (std::size_t i = 0; i < words.size(); ++i) x.row(static_cast<Eigen::Index>(i)) = lookup(words[i]).transpose();
    return x;
  }

 private:
  int dim_ = 0;
  std::uint64_t fallback_seed_ = 0;
  std::string source_meta_;
  std::unordered_map<std::string, std::size_t> index_;
  std::vector<float> values_;
};

namespace detail {

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

template <class T>
bool parse_number(std::string_view text, T& out) {
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (first != last && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, out);
  return ec == std::errc() && ptr == last;
}

}  // namespace detail

// Parses the word2vec text format:
//   <vocab_size> <dim>
//   <word> <v1> ... <vdim>
// Any row count other than vocab_size is an error.
inline EmbeddingStore load_embeddings(std::istream& in, std::uint64_t fallback_seed = 0,
                                      std::string source_meta = "stream") {
  std::string line;
  std::size_t line_no = 1;
  if (!std::getline(in, line)) throw EmbeddingParseError(line_no, "missing header");
  auto header = detail::split_ws(line);
  long long vocab = 0;
  int dim = 0;
  if (header.size() != 2 || !detail::parse_number(header[0], vocab) || !detail::parse_number(header[1], dim) ||
      vocab < 0 || dim < 1)
    throw EmbeddingParseError(line_no, "header must be '<vocab_size> <dim>'");

  EmbeddingStore store(dim, fallback_seed, std::move(source_meta));
  std::vector<float> row(static_cast<std::size_t>(dim));
  long long rows = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto fields = detail::split_ws(line);
    if (fields.empty()) continue;
    if (static_cast<int>(fields.size()) != dim + 1)
      throw EmbeddingParseError(line_no, "expected " + std::to_string(dim) + " values, found " +
                                             std::to_string(static_cast<long long>(fields.size()) - 1));
    for (int j = 0; j < dim; ++j) {
      double value = 0.0;
      if (!detail::parse_number(fields[static_cast<std::size_t>(j) + 1], value))
        throw EmbeddingParseError(line_no, "bad number '" + std::string(fields[static_cast<std::size_t>(j) + 1]) + "'");
      if (!std::isfinite(value) || std::abs(value) > std::numeric_limits<float>::max())
        throw EmbeddingParseError(line_no, "non-finite value");
      row[static_cast<std::size_t>(j)] = static_cast<float>(value);
    }
    store.insert(std::string(fields[0]), row);
    ++rows;
  }
  if (rows != vocab)
    throw EmbeddingParseError(line_no, "header declares " + std::to_string(vocab) + " rows, file has " +
                                           std::to_string(rows));
  return store;
}

inline EmbeddingStore load_embeddings(const std::string& path, std::uint64_t fallback_seed = 0) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open embeddings file '" + path + "'");
  return load_embeddings(in, fallback_seed, "word2vec-text:" + path);
}

}  // namespace pprx
