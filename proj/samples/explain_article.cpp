// Train a small model on the synthetic corpus, then explain one article.
//
//   explain_article "Some article text ..."

#include <iomanip>
#include <iostream>

#include "pprx/pprx.hpp"

int main(int argc, char** argv) {
  using namespace pprx;
  const std::string text = argc > 1 ? argv[1] : "sberka fkalo rsamine skalo fkami rsane sberka";

  // Hash-fallback vectors: every word gets a deterministic 300-d vector.
  const EmbeddingStore store(300, 0);
  const PipelineConfig pipeline = pipeline_for(store);

  SyntheticCorpusConfig corpus_cfg;
  corpus_cfg.per_class = 300;
  const auto features = featurize(synthetic_corpus(corpus_cfg), store, pipeline);
  const TrainOutcome trained = train_and_evaluate(features, pipeline, 0.2, 1, TrainConfig{});
  std::cout << "held-out accuracy " << trained.metrics.accuracy << "\n";

  const AnalyzedDocument doc = analyze(text, trained.model, store);
  std::cout << std::fixed << std::setprecision(6) << "p(real) " << doc.base.p_real << "  p(fake) "
            << doc.base.p_fake << "\n";

  const MisleadingReport report = explain_all(doc, trained.model);
  std::cout << std::setprecision(12);
  for (const auto& e : report.entries) std::cout << std::setw(14) << e.word << "  " << e.misleading_degree << "\n";

  // Masking the two most misleading words together.
  if (report.entries.size() >= 2) {
    const Prediction p = what_if(doc, trained.model, {report.entries[0].word, report.entries[1].word});
    std::cout << "without top two: p(fake) " << p.p_fake << "\n";
  }
}
