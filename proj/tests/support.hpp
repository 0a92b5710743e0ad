#pragma once

// Test-only generators and oracles. The oracles here deliberately avoid the
// library's sparse solver and tracker: PPR comes from a dense LU solve of
// (I - alpha M) p = (1 - alpha) r with M assembled directly from edge lists.

#include <algorithm>
#include <cstdint>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "pprx/pprx.hpp"

namespace pprx::fixtures {

inline std::vector<std::string> numbered_words(std::size_t n) {
  std::vector<std::string> words;
  for (std::size_t i = 0; i < n; ++i) words.push_back("w" + std::to_string(i));
  return words;
}

// Random spanning tree plus each remaining pair with probability `density`.
inline WordGraph random_connected_graph(std::size_t n, double density, std::mt19937_64& rng) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::vector<NodeId> order(n);
  for (NodeId i = 0; i < n; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  for (std::size_t k = 1; k < n; ++k) {
    std::uniform_int_distribution<std::size_t> parent(0, k - 1);
    edges.emplace_back(order[parent(rng)], order[k]);
  }
  std::bernoulli_distribution coin(density);
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b)
      if (coin(rng)) edges.emplace_back(a, b);
  return WordGraph::from_edges(numbered_words(n), std::move(edges));
}

// Erdos-Renyi graph; may be disconnected or contain isolated nodes.
inline WordGraph random_graph(std::size_t n, double density, std::mt19937_64& rng) {
  std::vector<std::pair<NodeId, NodeId>> edges;
  std::bernoulli_distribution coin(density);
  for (NodeId a = 0; a < n; ++a)
    for (NodeId b = a + 1; b < n; ++b)
      if (coin(rng)) edges.emplace_back(a, b);
  return WordGraph::from_edges(numbered_words(n), std::move(edges));
}

// Dense A D^-1 with the dangling self-loop rule, built from the edge list.
inline Eigen::MatrixXd dense_transition(const WordGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_nodes());
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n, n);
  for (auto [a, b] : g.edges()) {
    adj(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b)) = 1.0;
    adj(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(a)) = 1.0;
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const double deg = adj.col(j).sum();
    if (deg == 0.0)
      m(j, j) = 1.0;
    else
      m.col(j) = adj.col(j) / deg;
  }
  return m;
}

inline Eigen::VectorXd exact_ppr(const Eigen::MatrixXd& m, NodeId seed, double alpha) {
  const Eigen::Index n = m.rows();
  Eigen::VectorXd r = Eigen::VectorXd::Zero(n);
  r[static_cast<Eigen::Index>(seed)] = 1.0 - alpha;
  const Eigen::MatrixXd system = Eigen::MatrixXd::Identity(n, n) - alpha * m;
  return system.fullPivLu().solve(r);
}

inline Eigen::VectorXd exact_ppr(const WordGraph& g, NodeId seed, double alpha) {
  return exact_ppr(dense_transition(g), seed, alpha);
}

// Random article over a small vocabulary: at most `max_words` distinct words.
inline std::string random_document(std::mt19937_64& rng, std::size_t max_words, std::size_t length) {
  std::uniform_int_distribution<std::size_t> vocab(2, max_words);
  const std::size_t v = vocab(rng);
  std::uniform_int_distribution<std::size_t> pick(0, v - 1);
  std::string text;
  for (std::size_t t = 0; t < length; ++t) {
    text += "tok" + std::to_string(pick(rng));
    text += (t % 9 == 8) ? ". " : " ";
  }
  return text;
}

// Randomly initialized model whose standardizer is fitted on a few random
// documents, so standardized inputs are O(1).
inline MlpModel random_model(const EmbeddingStore& store, std::uint64_t seed, std::size_t calibration_docs = 8) {
  std::mt19937_64 rng(seed);
  PipelineConfig pipeline = pipeline_for(store);
  std::vector<DocEmbedding> embeddings;
  for (std::size_t k = 0; k < calibration_docs; ++k)
    embeddings.push_back(embed_text(random_document(rng, 40, 80), store, pipeline));
  MlpModel model;
  model.standardizer = fit_standardizer(embeddings);
  model.net = init_mlp(store.dim(), seed);
  model.pipeline = pipeline;
  return model;
}

// Misleading degree recomputed without tracking: mask the graph, solve every
// surviving seed exactly, read out, classify.
inline Prediction from_scratch_masked_prediction(const WordGraph& graph, const Eigen::MatrixXd& x,
                                                 const MlpModel& model, const MaskSet& mask) {
  const WordGraph masked = mask_nodes(graph, mask);
  const Eigen::MatrixXd m = dense_transition(masked);
  Eigen::VectorXd u = Eigen::VectorXd::Zero(x.cols());
  for (NodeId i = 0; i < graph.num_nodes(); ++i) {
    if (mask.contains(i)) continue;
    u += x.transpose() * exact_ppr(m, i, model.pipeline.alpha);
  }
  return predict(model, DocEmbedding{u, graph.num_nodes(), masked.num_edges()});
}

}  // namespace pprx::fixtures
