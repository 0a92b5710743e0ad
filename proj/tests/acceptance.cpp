// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Tolerances and time budgets are fixed here, not configurable.
//
// The desk-scale learning check uses a balanced 2,000-article subsample of the
// ISOT corpus when PPRX_ISOT_DIR points at a directory holding Fake.csv and
// True.csv, and the bundled synthetic two-distribution corpus otherwise.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include <unistd.h>

#include "pprx/cli.hpp"
#include "pprx/pprx.hpp"
#include "support.hpp"

using namespace pprx;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string sci(double v) {
  std::ostringstream out;
  out << std::scientific << std::setprecision(3) << v;
  return out.str();
}

int failures = 0;

void report(const std::string& name, const std::function<Outcome()>& check) {
  Outcome o;
  try {
    o = check();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  if (!o.pass) ++failures;
  std::cout << (o.pass ? "PASS " : "FAIL ") << name << " -- " << o.detail << std::endl;
}

// --- graph construction ----------------------------------------------------

Outcome graph_golden() {
  const auto start = Clock::now();
  const WordGraph g = build_word_graph(tokenize("I eat an apple"), 3);
  const double elapsed = seconds_since(start);
  std::set<std::pair<std::string, std::string>> got;
  for (auto [a, b] : g.edges()) {
    auto x = g.word(a), y = g.word(b);
    if (y < x) std::swap(x, y);
    got.emplace(x, y);
  }
  const std::set<std::pair<std::string, std::string>> want{
      {"eat", "i"}, {"an", "i"}, {"an", "eat"}, {"apple", "eat"}, {"an", "apple"}};
  const bool ok = got == want && g.num_nodes() == 4 && elapsed < 1e-3;
  return {ok, std::to_string(got.size()) + " edges, exact=" + (got == want ? "yes" : "no") +
                  ", time " + sci(elapsed) + " s (budget 1e-3)"};
}

// --- PPR solver --------------------------------------------------------------

Outcome ppr_fixed_point() {
  std::mt19937_64 rng(1001);
  const PprConfig cfg;
  double worst_residual = 0.0, worst_sum = 0.0;
  const auto start = Clock::now();
  for (int trial = 0; trial < 200; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 50);
    std::uniform_real_distribution<double> density(0.0, 0.3);
    const WordGraph g = fixtures::random_connected_graph(size(rng), density(rng), rng);
    const TransitionMatrix m = transition_matrix(g);
    for (NodeId seed = 0; seed < g.num_nodes(); ++seed) {
      const PprVector v = solve_ppr(m, seed, cfg);
      Eigen::VectorXd r = Eigen::VectorXd::Zero(v.p.size());
      r[static_cast<Eigen::Index>(seed)] = 1.0 - cfg.alpha;
      const Eigen::VectorXd fixed = cfg.alpha * (m.sparse() * v.p) + r;
      worst_residual = std::max(worst_residual, (v.p - fixed).lpNorm<1>());
      worst_sum = std::max(worst_sum, std::abs(v.p.sum() - 1.0));
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = worst_residual <= 1e-9 && worst_sum <= 1e-9 && elapsed < 5.0;
  return {ok, "max residual " + sci(worst_residual) + " (<= 1e-9), max |sum-1| " + sci(worst_sum) +
                  " (<= 1e-9), time " + sci(elapsed) + " s (budget 5)"};
}

// --- incremental tracking ------------------------------------------------------

Outcome tracking_equivalence() {
  std::mt19937_64 rng(2002);
  const PprConfig cfg;
  double worst = 0.0;
  const auto start = Clock::now();
  for (int trial = 0; trial < 100; ++trial) {
    std::uniform_int_distribution<std::size_t> size(2, 50);
    std::uniform_real_distribution<double> density(0.0, 0.3);
    const WordGraph g = fixtures::random_connected_graph(size(rng), density(rng), rng);
    std::uniform_int_distribution<NodeId> pick(0, g.num_nodes() - 1);
    const MaskSet mask{pick(rng)};
    const WordGraph masked = mask_nodes(g, mask);
    const TransitionMatrix m = transition_matrix(g), m2 = transition_matrix(masked);
    const TransitionDelta delta = TransitionDelta::for_mask(g, mask);
    const Eigen::MatrixXd dense2 = fixtures::dense_transition(masked);
    for (NodeId seed = 0; seed < g.num_nodes(); ++seed) {
      if (mask.contains(seed)) continue;
      const PprVector tracked = track_ppr(solve_ppr(m, seed, cfg), m, m2, delta, cfg);
      worst = std::max(worst, (tracked.p - fixtures::exact_ppr(dense2, seed, cfg.alpha)).lpNorm<1>());
    }
  }

  // Path a-b-c, mask c: b loses its edge to c, c becomes isolated.
  const WordGraph path = WordGraph::from_edges({"a", "b", "c"}, {{0, 1}, {1, 2}});
  const MaskSet mask{2};
  const TransitionMatrix m = transition_matrix(path), m2 = transition_matrix(mask_nodes(path, mask));
  const TransitionDelta delta = TransitionDelta::for_mask(path, mask);
  double path_gap = 0.0;
  for (NodeId seed : {NodeId{0}, NodeId{1}}) {
    const PprVector tracked = track_ppr(solve_ppr(m, seed, cfg), m, m2, delta, cfg);
    // Two-node path closed form: p_seed = 1/(1+alpha), p_other = alpha/(1+alpha), nothing on c.
    Eigen::Vector3d expected = Eigen::Vector3d::Zero();
    expected[static_cast<Eigen::Index>(seed)] = 1.0 / (1.0 + cfg.alpha);
    expected[static_cast<Eigen::Index>(1 - seed)] = cfg.alpha / (1.0 + cfg.alpha);
    path_gap = std::max(path_gap, (tracked.p - expected).lpNorm<1>());
  }
  const double elapsed = seconds_since(start);
  const bool ok = worst < 1e-6 && path_gap < 1e-6 && elapsed < 10.0;
  return {ok, "max L1 gap " + sci(worst) + " (< 1e-6), 3-node path gap " + sci(path_gap) + ", time " +
                  sci(elapsed) + " s (budget 10)"};
}

// --- explanation -----------------------------------------------------------------

Outcome explanation_consistency() {
  const EmbeddingStore store(32, 17);
  std::mt19937_64 rng(3003);
  double worst = 0.0;
  std::size_t words = 0;
  const auto start = Clock::now();
  for (int doc_index = 0; doc_index < 20; ++doc_index) {
    const MlpModel model = fixtures::random_model(store, 500 + static_cast<std::uint64_t>(doc_index));
    std::uniform_int_distribution<std::size_t> length(5, 120);
    const std::string text = fixtures::random_document(rng, 40, length(rng));
    const AnalyzedDocument doc = analyze(text, model, store);
    const MisleadingReport report = explain_all(doc, model);
    for (const auto& e : report.entries) {
      const Prediction oracle = fixtures::from_scratch_masked_prediction(doc.graph, doc.features, model, MaskSet{e.node_id});
      const double expected = oracle[report.reference_class] - doc.base[report.reference_class];
      worst = std::max(worst, std::abs(e.misleading_degree - expected));
      ++words;
    }
  }
  const double elapsed = seconds_since(start);
  const bool ok = worst < 1e-6 && elapsed < 60.0;
  return {ok, std::to_string(words) + " words, max |degree gap| " + sci(worst) + " (< 1e-6), time " + sci(elapsed) +
                  " s (budget 60)"};
}

// --- classifier gradient -----------------------------------------------------------

Outcome gradient_check() {
  std::mt19937_64 rng(4004);
  std::normal_distribution<double> normal;
  double worst = 0.0;
  std::size_t checked = 0;
  for (int draw = 0; draw < 50; ++draw) {
    std::uniform_int_distribution<int> dim(1, 8), hidden(1, 8), rows(1, 6);
    const int d = dim(rng);
    Mlp net = init_mlp(d, rng(), hidden(rng));
    for (auto& v : net.b1) v = 0.1 * normal(rng);
    for (auto& v : net.b2) v = 0.1 * normal(rng);
    Eigen::MatrixXd x(rows(rng), d);
    for (auto& v : x.reshaped()) v = normal(rng);
    std::vector<int> y(static_cast<std::size_t>(x.rows()));
    for (auto& label : y) label = static_cast<int>(rng() % 2);

    Mlp grad = Mlp::zeros_like(net);
    batch_loss(net, x, y, &grad);
    auto compare = [&](auto member) {
      auto& param = net.*member;
      const auto& analytic = grad.*member;
      for (Eigen::Index i = 0; i < param.size(); ++i) {
        const double saved = param.data()[i];
        param.data()[i] = saved + 1e-5;
        const double up = batch_loss(net, x, y);
        param.data()[i] = saved - 1e-5;
        const double down = batch_loss(net, x, y);
        param.data()[i] = saved;
        const double numeric = (up - down) / 2e-5;
        const double a = analytic.data()[i];
        const double rel = std::abs(a - numeric) / std::max({1e-8, std::abs(a), std::abs(numeric)});
        worst = std::max(worst, rel);
        ++checked;
      }
    };
    compare(&Mlp::w1);
    compare(&Mlp::b1);
    compare(&Mlp::w2);
    compare(&Mlp::b2);
  }
  return {worst < 1e-4, std::to_string(checked) + " partials over 50 draws, max relative error " + sci(worst) +
                            " (< 1e-4)"};
}

// --- readout ---------------------------------------------------------------------------

Outcome readout_identity() {
  std::mt19937_64 rng(5005);
  std::normal_distribution<double> normal;
  double worst_identity = 0.0, worst_perm = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    std::uniform_int_distribution<std::size_t> size(1, 40);
    const std::size_t n = size(rng);
    const WordGraph g = fixtures::random_graph(n, 0.15, rng);
    const auto ppr = all_ppr(g, PprConfig{});
    Eigen::MatrixXd x(static_cast<Eigen::Index>(n), 8);
    for (auto& v : x.reshaped()) v = normal(rng);

    Eigen::VectorXd pooled = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));
    for (const auto& v : ppr) pooled += v.p;
    const Eigen::VectorXd u = readout_sum(ppr, x).u;
    worst_identity = std::max(worst_identity, (u - x.transpose() * pooled).cwiseAbs().maxCoeff());

    // Reordering the seeds in the sum must not change the result.
    std::vector<PprVector> shuffled = ppr;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    worst_perm = std::max(worst_perm, (readout_sum(shuffled, x).u - u).cwiseAbs().maxCoeff());

    // Relabeling the nodes (graph and feature rows together) must not either.
    std::vector<NodeId> perm(n);
    std::iota(perm.begin(), perm.end(), NodeId{0});
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::pair<NodeId, NodeId>> edges;
    for (auto [a, b] : g.edges()) edges.emplace_back(perm[a], perm[b]);
    const WordGraph h = WordGraph::from_edges(fixtures::numbered_words(n), edges);
    Eigen::MatrixXd xp(x.rows(), x.cols());
    for (std::size_t i = 0; i < n; ++i) xp.row(static_cast<Eigen::Index>(perm[i])) = x.row(static_cast<Eigen::Index>(i));
    worst_perm = std::max(worst_perm, (readout_sum(all_ppr(h, PprConfig{}), xp).u - u).cwiseAbs().maxCoeff());
  }
  const bool ok = worst_identity <= 1e-10 && worst_perm <= 1e-12;
  return {ok, "max identity gap " + sci(worst_identity) + " (<= 1e-10), max permutation gap " + sci(worst_perm) +
                  " (<= 1e-12)"};
}

// --- learning ----------------------------------------------------------------------------

std::vector<NewsRecord> desk_scale_corpus(std::string& source) {
  if (const char* dir = std::getenv("PPRX_ISOT_DIR"); dir && fs::exists(fs::path(dir) / "Fake.csv")) {
    const Corpus corpus = load_corpus(dir);
    std::vector<NewsRecord> fake, real;
    for (const auto& r : corpus.records) (r.label == kLabelFake ? fake : real).push_back(r);
    std::mt19937_64 engine(0);
    std::shuffle(fake.begin(), fake.end(), engine);
    std::shuffle(real.begin(), real.end(), engine);
    const std::size_t per_class = std::min<std::size_t>({1000, fake.size(), real.size()});
    std::vector<NewsRecord> out(fake.begin(), fake.begin() + static_cast<std::ptrdiff_t>(per_class));
    out.insert(out.end(), real.begin(), real.begin() + static_cast<std::ptrdiff_t>(per_class));
    source = "ISOT subsample";
    return out;
  }
  source = "synthetic corpus";
  return synthetic_corpus();
}

Outcome desk_scale_learning() {
  std::string source;
  const auto records = desk_scale_corpus(source);
  const EmbeddingStore store(300, 0);
  const PipelineConfig pipeline = pipeline_for(store);
  const auto features = featurize(records, store, pipeline, default_workers());
  const TrainOutcome out = train_and_evaluate(features, pipeline, 0.2, 0, TrainConfig{});
  std::ostringstream detail;
  detail << source << ", " << records.size() << " articles, test accuracy " << std::fixed << std::setprecision(4)
         << out.metrics.accuracy << " (>= 0.80), f1 " << out.metrics.f1 << ", n_test " << out.metrics.n_test;
  return {out.metrics.accuracy >= 0.80, detail.str()};
}

// --- determinism ----------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "pprx");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  std::istringstream in;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err, in);
  if (code != 0) std::cerr << err.str();
  return code;
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / ("pprx_acceptance_" + std::to_string(::getpid()));
  fs::create_directories(root);
  const std::string corpus = (root / "corpus").string(), vectors = (root / "vectors.txt").string();
  write_corpus(corpus, synthetic_corpus());
  std::ofstream(vectors) << "0 300\n";
  const std::string a = (root / "a.json").string(), b = (root / "b.json").string();
  const int rc_a = run_cli({"train", "--data", corpus, "--embeddings", vectors, "--out", a, "--seed", "3"});
  const int rc_b = run_cli({"train", "--data", corpus, "--embeddings", vectors, "--out", b, "--seed", "3"});
  const bool models_equal = rc_a == 0 && rc_b == 0 && slurp(a) == slurp(b) && !slurp(a).empty();

  // Explanations of a few articles with 1 and 8 workers.
  const MlpModel model = load_model(a);
  const EmbeddingStore store(300, model.pipeline.fallback_seed);
  const auto records = synthetic_corpus(SyntheticCorpusConfig{.per_class = 3});
  bool explain_equal = true;
  std::size_t compared = 0;
  for (const auto& r : records) {
    const AnalyzedDocument doc1 = analyze(r.article(), model, store, 1);
    const AnalyzedDocument doc8 = analyze(r.article(), model, store, 8);
    ExplainOptions one, eight;
    eight.workers = 8;
    const MisleadingReport x = explain_all(doc1, model, one);
    const MisleadingReport y = explain_all(doc8, model, eight);
    explain_equal = explain_equal && doc1.base == doc8.base && x.entries.size() == y.entries.size();
    for (std::size_t k = 0; explain_equal && k < x.entries.size(); ++k) {
      explain_equal = x.entries[k].node_id == y.entries[k].node_id &&
                      x.entries[k].misleading_degree == y.entries[k].misleading_degree &&
                      x.entries[k].masked_prediction == y.entries[k].masked_prediction;
      ++compared;
    }
  }
  fs::remove_all(root);
  return {models_equal && explain_equal, std::string("model files byte-identical=") + (models_equal ? "yes" : "no") +
                                             ", explain_all 1 vs 8 workers identical=" +
                                             (explain_equal ? "yes" : "no") + " over " + std::to_string(compared) +
                                             " entries"};
}

}  // namespace

int main() {
  report("graph-construction golden", graph_golden);
  report("ppr fixed-point suite", ppr_fixed_point);
  report("incremental tracking oracle equivalence", tracking_equivalence);
  report("end-to-end explanation consistency", explanation_consistency);
  report("mlp gradient check", gradient_check);
  report("readout identity", readout_identity);
  report("desk-scale learning sanity", desk_scale_learning);
  report("determinism", determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << std::endl;
  return failures == 0 ? 0 : 1;
}
