#pragma once

#include <algorithm>
#include <atomic>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "pprx/classifier.hpp"
#include "pprx/embeddings.hpp"
#include "pprx/encode.hpp"
#include "pprx/errors.hpp"
#include "pprx/parallel.hpp"
#include "pprx/ppr.hpp"
#include "pprx/textgraph.hpp"

namespace pprx {

// Text -> graph -> pooled PPR mass -> u, without materializing per-seed
// vectors. Used for bulk feature extraction.
inline DocEmbedding embed_text(std::string_view text, const EmbeddingStore& store, const PipelineConfig& pipeline) {
  if (store.dim() != pipeline.dim)
    throw Error(ErrorKind::Shape, "embedding store has dim " + std::to_string(store.dim()) + ", pipeline expects " +
                                      std::to_string(pipeline.dim));
  const WordGraph graph = build_word_graph(tokenize(text), pipeline.window_k);
  const Eigen::MatrixXd x = store.features(graph.words());
  const Eigen::VectorXd mass = ppr_mass(transition_matrix(graph), pipeline.ppr());
  return DocEmbedding{pooled_readout(mass, x), graph.num_nodes(), graph.num_edges()};
}

// Everything computed for one query document before explanation.
struct AnalyzedDocument {
  WordGraph graph;
  Eigen::MatrixXd features;  // n x d, row i is word i's vector
  TransitionMatrix transition;
  std::vector<PprVector> ppr;  // ppr[i] is seeded at node i
  DocEmbedding embedding;
  Prediction base;
};

enum class AnalysisStage { BuildingGraph, SolvingPpr, Masking, Ranking };

inline const char* to_string(AnalysisStage stage) {
  switch (stage) {
    case AnalysisStage::BuildingGraph: return "building-graph";
    case AnalysisStage::SolvingPpr: return "solving-ppr";
    case AnalysisStage::Masking: return "masking";
    case AnalysisStage::Ranking: return "ranking";
  }
  return "unknown";
}

inline AnalyzedDocument analyze(std::string_view text, const MlpModel& model, const EmbeddingStore& store,
                                unsigned workers = 1,
                                const std::function<void(AnalysisStage)>& on_stage = {}) {
  const PipelineConfig& pipeline = model.pipeline;
  if (store.dim() != model.input_dim())
    throw Error(ErrorKind::Shape, "embedding store has dim " + std::to_string(store.dim()) + ", model expects " +
                                      std::to_string(model.input_dim()));
  if (on_stage) on_stage(AnalysisStage::BuildingGraph);
  AnalyzedDocument doc;
  doc.graph = build_word_graph(tokenize(text), pipeline.window_k);
  doc.features = store.features(doc.graph.words());
  doc.transition = transition_matrix(doc.graph);
  if (on_stage) on_stage(AnalysisStage::SolvingPpr);
  doc.ppr = all_ppr(doc.transition, pipeline.ppr(), workers);
  doc.embedding = readout_sum(doc.ppr, doc.features);
  doc.embedding.n_edges = doc.graph.num_edges();
  doc.base = predict(model, doc.embedding);
  return doc;
}

// Prediction after masking every node in `mask`: surviving seeds are tracked
// from their unmasked PPR vectors, masked seeds are dropped from the readout.
inline Prediction masked_prediction(const AnalyzedDocument& doc, const MlpModel& model, const MaskSet& mask) {
  const WordGraph masked_graph = mask_nodes(doc.graph, mask);
  const TransitionMatrix masked_m = transition_matrix(masked_graph);
  const TransitionDelta delta = TransitionDelta::for_mask(doc.graph, mask);
  const PprConfig cfg = model.pipeline.ppr();

  Eigen::VectorXd pooled = Eigen::VectorXd::Zero(doc.features.rows());
  for (NodeId seed = 0; seed < doc.ppr.size(); ++seed) {
    if (mask.contains(seed)) continue;
    pooled += track_ppr(doc.ppr[seed], doc.transition, masked_m, delta, cfg).p;
  }
  DocEmbedding u{pooled_readout(pooled, doc.features), doc.graph.num_nodes(), masked_graph.num_edges()};
  return predict(model, u);
}

struct MaskedOutcome {
  double degree = 0.0;  // signed change in reference-class probability
  Prediction masked;
};

inline MaskedOutcome misleading_degree(const AnalyzedDocument& doc, const MlpModel& model, NodeId node,
                                       int reference_class) {
  if (reference_class != kLabelReal && reference_class != kLabelFake)
    throw Error(ErrorKind::InvalidArgument, "reference class must be 0 or 1");
  const Prediction masked = masked_prediction(doc, model, MaskSet{node});
  return MaskedOutcome{masked[reference_class] - doc.base[reference_class], masked};
}

struct MisleadingEntry {
  std::string word;
  NodeId node_id = 0;
  double misleading_degree = 0.0;
  Prediction masked_prediction;
};

struct MisleadingReport {
  std::vector<MisleadingEntry> entries;  // degree descending, ties by node id
  int reference_class = kLabelFake;
};

struct ExplainOptions {
  unsigned workers = 1;
  // Ground-truth class in evaluation mode; argmax of the base prediction otherwise.
  std::optional<int> reference_class;
  // Called once per finished word with the number of words done so far. May
  // be invoked from worker threads.
  std::function<void(std::size_t done, std::size_t total)> on_progress;
};

inline MisleadingReport explain_all(const AnalyzedDocument& doc, const MlpModel& model,
                                    const ExplainOptions& options = {}) {
  MisleadingReport report;
  report.reference_class = options.reference_class.value_or(doc.base.argmax());
  const std::size_t n = doc.graph.num_nodes();
  report.entries.resize(n);
  std::atomic<std::size_t> done{0};
  parallel_for(n, options.workers, [&](std::size_t node) {
    MaskedOutcome outcome;
    try {
      outcome = misleading_degree(doc, model, node, report.reference_class);
    } catch (const Error& e) {
      throw Error(e.kind(), "while masking '" + doc.graph.word(node) + "': " + e.what());
    }
    report.entries[node] = MisleadingEntry{doc.graph.word(node), node, outcome.degree, outcome.masked};
    const std::size_t finished = done.fetch_add(1) + 1;
    if (options.on_progress) options.on_progress(finished, n);
  });
  std::sort(report.entries.begin(), report.entries.end(), [](const MisleadingEntry& a, const MisleadingEntry& b) {
    if (a.misleading_degree != b.misleading_degree) return a.misleading_degree > b.misleading_degree;
    return a.node_id < b.node_id;
  });
  return report;
}

// Masks all named words at once. Words are matched after ASCII lowercasing.
inline Prediction what_if(const AnalyzedDocument& doc, const MlpModel& model, const std::vector<std::string>& words) {
  if (words.empty()) return doc.base;
  std::vector<NodeId> ids;
  std::vector<std::string> missing;
  for (std::string w : words) {
    std::transform(w.begin(), w.end(), w.begin(), [](unsigned char c) {
      return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : static_cast<char>(c);
    });
    if (auto id = doc.graph.index_of(w))
      ids.push_back(*id);
    else
      missing.push_back(w);
  }
  if (!missing.empty()) throw UnknownWordError(std::move(missing));
  return masked_prediction(doc, model, MaskSet(std::move(ids)));
}

}  // namespace pprx
