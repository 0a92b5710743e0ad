#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <iterator>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
// Eigen must come first: <resolv.h>, pulled in by httplib, defines _res.
#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <httplib.h>
#include <json.hpp>

#include "pprx/classifier.hpp"
#include "pprx/data.hpp"
#include "pprx/embeddings.hpp"
#include "pprx/errors.hpp"
#include "pprx/explain.hpp"
#include "pprx/service.hpp"

namespace pprx::cli {

enum ExitCode : int { kOk = 0, kInternal = 1, kBadInput = 2, kBadQuery = 3 };

inline int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyDocument: return kBadQuery;
    case ErrorKind::Io:
    case ErrorKind::EmbeddingParse:
    case ErrorKind::Corpus:
    case ErrorKind::ModelFormat:
    case ErrorKind::InvalidArgument: return kBadInput;
    default: return kInternal;
  }
}

inline std::string fixed(double value, int decimals) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(decimals) << value;
  return out.str();
}

inline std::string percent(double probability) { return fixed(probability * 100.0, 9) + "%"; }

struct TextSource {
  std::optional<std::string> text;
  std::string file;
  bool use_stdin = false;

  std::string read(std::istream& in) const {
    const int chosen = (text ? 1 : 0) + (!file.empty() ? 1 : 0) + (use_stdin ? 1 : 0);
    if (chosen != 1) throw Error(ErrorKind::InvalidArgument, "give exactly one of --text, --file, --stdin");
    if (text) return *text;
    if (use_stdin) return std::string(std::istreambuf_iterator<char>(in), {});
    std::ifstream f(file, std::ios::binary);
    if (!f) throw Error(ErrorKind::Io, "cannot open text file '" + file + "'");
    return std::string(std::istreambuf_iterator<char>(f), {});
  }

  void add_flags(CLI::App& cmd) {
    cmd.add_option("--text", text, "Article text");
    cmd.add_option("--file", file, "Read the article from a file");
    cmd.add_flag("--stdin", use_stdin, "Read the article from standard input");
  }
};

// Embeddings for a trained model: an explicit file wins, then the file the
// model was trained with, then a fallback-only store.
inline EmbeddingStore embeddings_for(const MlpModel& model, const std::string& explicit_path) {
  constexpr std::string_view kPrefix = "word2vec-text:";
  std::string path = explicit_path;
  const auto& source = model.pipeline.embedding_source;
  if (path.empty() && source.rfind(kPrefix, 0) == 0) {
    path = source.substr(kPrefix.size());
    if (!std::filesystem::exists(path))
      throw Error(ErrorKind::Io, "model was trained with embeddings '" + path + "', which is missing; pass --embeddings");
  }
  EmbeddingStore store = path.empty() ? EmbeddingStore(model.pipeline.dim, model.pipeline.fallback_seed)
                                       : load_embeddings(path, model.pipeline.fallback_seed);
  if (store.dim() != model.input_dim())
    throw Error(ErrorKind::Shape, "embeddings have dim " + std::to_string(store.dim()) + ", model expects " +
                                      std::to_string(model.input_dim()));
  return store;
}

struct TrainFlags {
  int epochs = 20;
  int batch = 64;
  double lr = 1e-4;
  int hidden = 32;

  void add(CLI::App& cmd) {
    cmd.add_option("--epochs", epochs, "Training epochs")->check(CLI::NonNegativeNumber);
    cmd.add_option("--batch", batch, "Mini-batch size")->check(CLI::PositiveNumber);
    cmd.add_option("--lr", lr, "Adam learning rate")->check(CLI::PositiveNumber);
    cmd.add_option("--hidden", hidden, "Hidden layer width")->check(CLI::PositiveNumber);
  }

  TrainConfig config() const {
    TrainConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = batch;
    cfg.learning_rate = lr;
    cfg.hidden = hidden;
    return cfg;
  }
};

inline void print_prediction(std::ostream& out, const Prediction& p, std::size_t nodes, std::size_t edges) {
  out << "p_real  " << fixed(p.p_real, 12) << "  (" << percent(p.p_real) << ")\n"
      << "p_fake  " << fixed(p.p_fake, 12) << "  (" << percent(p.p_fake) << ")\n"
      << "verdict " << (p.argmax() == kLabelFake ? "fake" : "real") << "\n"
      << "graph   " << nodes << " nodes, " << edges << " edges\n";
}

inline nlohmann::json prediction_json(const Prediction& p, std::size_t nodes, std::size_t edges) {
  return {{"p_real", p.p_real},           {"p_fake", p.p_fake},         {"p_real_percent", percent(p.p_real)},
          {"p_fake_percent", percent(p.p_fake)}, {"n_nodes", nodes}, {"n_edges", edges}};
}

struct Summary {
  double mean = 0.0;
  double stddev = 0.0;  // population
};

inline Summary summarize(const std::vector<double>& values) {
  Summary s;
  if (values.empty()) return s;
  for (double v : values) s.mean += v;
  s.mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(var / static_cast<double>(values.size()));
  return s;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << content;
}

// Entry point shared by the executable and the tests. Returns the exit code.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, std::istream& in) {
  CLI::App app{"Explainable fake-news classification over word co-occurrence graphs", "pprx"};
  app.require_subcommand(1);
  bool json_output = false;

  // train
  std::string data_dir, embeddings_path, out_path, metrics_path;
  std::uint64_t seed = 0;
  double test_fraction = 0.2;
  unsigned workers = 1;
  TrainFlags train_flags;
  auto* train_cmd = app.add_subcommand("train", "Train a model and report held-out metrics");
  train_cmd->add_option("--data", data_dir, "Directory with Fake.csv and True.csv")->required();
  train_cmd->add_option("--embeddings", embeddings_path, "word2vec text-format vectors")->required();
  train_cmd->add_option("--out", out_path, "Model file to write")->required();
  train_cmd->add_option("--seed", seed, "Split, shuffle and initialization seed");
  train_cmd->add_option("--splits", test_fraction, "Held-out fraction")->check(CLI::Range(0.0, 1.0));
  train_cmd->add_option("--metrics", metrics_path, "Metrics report path (default: <out>.metrics.json)");
  train_cmd->add_option("--workers", workers, "Feature-extraction threads")->check(CLI::PositiveNumber);
  train_flags.add(*train_cmd);

  // eval
  int runs = 10;
  auto* eval_cmd = app.add_subcommand("eval", "Repeated random-split evaluation (mean and std)");
  eval_cmd->add_option("--data", data_dir, "Directory with Fake.csv and True.csv")->required();
  eval_cmd->add_option("--embeddings", embeddings_path, "word2vec text-format vectors")->required();
  eval_cmd->add_option("--splits", test_fraction, "Held-out fraction")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--runs", runs, "Number of random splits")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--seed", seed, "First seed; runs use seed, seed+1, ...");
  eval_cmd->add_option("--out", metrics_path, "Also write the report to this file");
  eval_cmd->add_option("--workers", workers, "Feature-extraction threads")->check(CLI::PositiveNumber);
  train_flags.add(*eval_cmd);

  // predict / explain
  std::string model_path;
  TextSource source;
  auto* predict_cmd = app.add_subcommand("predict", "Classify one article");
  predict_cmd->add_option("--model", model_path, "Trained model file")->required();
  predict_cmd->add_option("--embeddings", embeddings_path, "Override the model's embeddings file");
  source.add_flags(*predict_cmd);

  int top_k = 25;
  std::string label_name;
  auto* explain_cmd = app.add_subcommand("explain", "Rank words by misleading degree");
  explain_cmd->add_option("--model", model_path, "Trained model file")->required();
  explain_cmd->add_option("--embeddings", embeddings_path, "Override the model's embeddings file");
  explain_cmd->add_option("--top-k", top_k, "Entries to print; 0 prints the prediction only, -1 prints all");
  explain_cmd->add_option("--workers", workers, "Masking threads")->check(CLI::PositiveNumber);
  explain_cmd->add_option("--label", label_name, "Ground-truth label used as the reference class")
      ->check(CLI::IsMember({"real", "fake"}));
  source.add_flags(*explain_cmd);

  // serve
  int port = 8080;
  std::string host = "0.0.0.0", static_dir;
  auto* serve_cmd = app.add_subcommand("serve", "HTTP API for the interactive UI");
  serve_cmd->add_option("--model", model_path, "Trained model file");
  serve_cmd->add_option("--embeddings", embeddings_path, "Override the model's embeddings file");
  serve_cmd->add_option("--port", port, "Listening port");
  serve_cmd->add_option("--host", host, "Listening address");
  serve_cmd->add_option("--static-dir", static_dir, "Built web UI to serve at /");
  serve_cmd->add_option("--workers", workers, "Masking threads per explain job")->check(CLI::PositiveNumber);

  // synth
  std::size_t per_class = 1000;
  std::uint64_t synth_seed = 7;
  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic two-class corpus (Fake.csv, True.csv)");
  synth_cmd->add_option("--out", out_path, "Output directory")->required();
  synth_cmd->add_option("--per-class", per_class, "Articles per class")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");

  for (auto* cmd : {train_cmd, eval_cmd, predict_cmd, explain_cmd})
    cmd->add_flag("--json", json_output, "Structured (JSON) output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kBadInput;
  }

  try {
    if (*train_cmd) {
      const EmbeddingStore store = load_embeddings(embeddings_path);
      const Corpus corpus = load_corpus(data_dir);
      const PipelineConfig pipeline = pipeline_for(store);
      const auto features = featurize(corpus.records, store, pipeline, workers);
      const TrainOutcome outcome = train_and_evaluate(features, pipeline, test_fraction, seed, train_flags.config());
      save_model(outcome.model, out_path);
      nlohmann::json report = metrics_to_json(outcome.metrics);
      report["dropped_records"] = corpus.dropped;
      report["test_fraction"] = test_fraction;
      write_text_file(metrics_path.empty() ? out_path + ".metrics.json" : metrics_path, report.dump(2) + "\n");
      if (json_output) {
        out << report.dump(2) << "\n";
      } else {
        out << "trained on " << outcome.metrics.n_train << " articles, held out " << outcome.metrics.n_test
            << " (dropped " << corpus.dropped << ")\n"
            << "accuracy  " << fixed(outcome.metrics.accuracy, 4) << "\n"
            << "precision " << fixed(outcome.metrics.precision, 4) << "\n"
            << "recall    " << fixed(outcome.metrics.recall, 4) << "\n"
            << "f1        " << fixed(outcome.metrics.f1, 4) << "\n"
            << "model written to " << out_path << "\n";
      }
      return kOk;
    }

    if (*eval_cmd) {
      const EmbeddingStore store = load_embeddings(embeddings_path);
      const Corpus corpus = load_corpus(data_dir);
      const PipelineConfig pipeline = pipeline_for(store);
      const auto features = featurize(corpus.records, store, pipeline, workers);
      std::vector<double> acc, prec, rec, f1;
      nlohmann::json per_run = nlohmann::json::array();
      for (int r = 0; r < runs; ++r) {
        const auto m =
            train_and_evaluate(features, pipeline, test_fraction, seed + static_cast<std::uint64_t>(r), train_flags.config())
                .metrics;
        acc.push_back(m.accuracy);
        prec.push_back(m.precision);
        rec.push_back(m.recall);
        f1.push_back(m.f1);
        per_run.push_back(metrics_to_json(m));
      }
      nlohmann::json report{{"runs", runs}, {"test_fraction", test_fraction}, {"per_run", per_run}};
      const std::pair<const char*, const std::vector<double>*> metrics[] = {
          {"accuracy", &acc}, {"precision", &prec}, {"recall", &rec}, {"f1", &f1}};
      for (auto [name, values] : metrics) {
        const Summary s = summarize(*values);
        report[name] = {{"mean", s.mean}, {"std", s.stddev}};
      }
      if (!metrics_path.empty()) write_text_file(metrics_path, report.dump(2) + "\n");
      if (json_output) {
        out << report.dump(2) << "\n";
      } else {
        out << runs << " runs, test fraction " << test_fraction << "\n";
        for (auto [name, values] : metrics) {
          const Summary s = summarize(*values);
          out << std::left << std::setw(10) << name << fixed(s.mean, 4) << " +/- " << fixed(s.stddev, 4) << "\n";
        }
      }
      return kOk;
    }

    if (*predict_cmd || *explain_cmd) {
      const MlpModel model = load_model(model_path);
      const EmbeddingStore store = embeddings_for(model, embeddings_path);
      const std::string text = source.read(in);
      const AnalyzedDocument doc = analyze(text, model, store, workers);
      const auto nodes = doc.graph.num_nodes();
      const auto edges = doc.graph.num_edges();
      if (*predict_cmd) {
        if (json_output)
          out << prediction_json(doc.base, nodes, edges).dump(2) << "\n";
        else
          print_prediction(out, doc.base, nodes, edges);
        return kOk;
      }

      std::optional<MisleadingReport> report;
      if (top_k != 0) {
        ExplainOptions opts;
        opts.workers = workers;
        if (!label_name.empty()) opts.reference_class = label_name == "fake" ? kLabelFake : kLabelReal;
        report = explain_all(doc, model, opts);
      }
      const std::size_t shown =
          !report ? 0 : (top_k < 0 ? report->entries.size() : std::min<std::size_t>(report->entries.size(), top_k));
      if (json_output) {
        nlohmann::json body = prediction_json(doc.base, nodes, edges);
        if (report) {
          body["explanation"] = report_to_json(*report, doc.base, top_k);
          for (auto& e : body["explanation"]["entries"])
            e["misleading_degree_text"] = fixed(e["misleading_degree"].get<double>(), 14);
        }
        out << body.dump(2) << "\n";
        return kOk;
      }
      print_prediction(out, doc.base, nodes, edges);
      if (report) {
        const int ref = report->reference_class;
        out << "\nreference class: " << model.pipeline.label_names[static_cast<std::size_t>(ref)] << "\n"
            << std::left << std::setw(6) << "rank" << std::setw(24) << "word" << std::setw(22) << "misleading_degree"
            << "masked_p_" << model.pipeline.label_names[static_cast<std::size_t>(ref)] << "\n";
        for (std::size_t r = 0; r < shown; ++r) {
          const auto& e = report->entries[r];
          out << std::left << std::setw(6) << (r + 1) << std::setw(24) << e.word << std::setw(22)
              << fixed(e.misleading_degree, 14) << fixed(e.masked_prediction[ref], 12) << "\n";
        }
      }
      return kOk;
    }

    if (*serve_cmd) {
      std::shared_ptr<const MlpModel> model;
      std::shared_ptr<const EmbeddingStore> store;
      if (!model_path.empty()) {
        model = std::make_shared<const MlpModel>(load_model(model_path));
        store = std::make_shared<const EmbeddingStore>(embeddings_for(*model, embeddings_path));
      }
      ServiceOptions options;
      options.workers = workers;
      options.static_dir = static_dir;
      Service service(model, store, options);
      httplib::Server server;
      service.mount(server);
      err << "listening on " << host << ":" << port << (model ? "" : " (no model loaded)") << std::endl;
      if (!server.listen(host, port)) throw Error(ErrorKind::Io, "cannot listen on " + host + ":" + std::to_string(port));
      return kOk;
    }

    if (*synth_cmd) {
      SyntheticCorpusConfig cfg;
      cfg.per_class = per_class;
      cfg.seed = synth_seed;
      write_corpus(out_path, synthetic_corpus(cfg));
      out << "wrote " << per_class << " fake and " << per_class << " real articles to " << out_path << "\n";
      return kOk;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}

}  // namespace pprx::cli
